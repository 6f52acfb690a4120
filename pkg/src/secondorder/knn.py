"""Exact cosine k-nearest-neighbour search.

Similarities are computed block-wise as dense matrix products over
L2-normalized rows, scored against the distinct rows of the matrix.  Each query excludes itself by id, so two distinct words
with identical vectors are still each other's neighbours.  Ties in
similarity are broken by ascending word id.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embed_io import EmbeddingSet, Vocabulary, normalize_rows
from .errors import (
    DataError,
    IoFailure,
    KZero,
    LengthMismatch,
    MalformedLine,
    UnknownWord,
    ZeroVector,
)

BLOCK_ROWS = 256


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"vector shapes {a.shape} and {b.shape} differ")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector()
    return float(min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))


@dataclass(frozen=True, eq=False)
class NeighborList:
    """Ranked neighbours for every word.

    ``ids[v]`` and ``sims[v]`` hold the ``min(k, n-1)`` nearest words to ``v``
    in rank order.
    """

    vocab: Vocabulary
    k: int
    ids: np.ndarray
    sims: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        sims = np.asarray(self.sims, dtype=np.float64)
        if ids.shape != sims.shape or ids.ndim != 2 or ids.shape[0] != len(self.vocab):
            raise DataError("neighbour arrays do not match the vocabulary")
        ids.setflags(write=False)
        sims.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "sims", sims)

    def __len__(self):
        return len(self.vocab)

    def __eq__(self, other):
        if not isinstance(other, NeighborList):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and self.k == other.k
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.sims, other.sims)
        )

    __hash__ = None

    def entries(self, v: int) -> list[tuple[int, float]]:
        return list(zip(self.ids[v].tolist(), self.sims[v].tolist()))

    def neighbor_set(self, v: int) -> set[int]:
        return set(self.ids[v].tolist())


def _as_normalized(e: EmbeddingSet) -> EmbeddingSet:
    return e if e.normalized else normalize_rows(e)


def _rank_rows(sims: np.ndarray, kk: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``kk`` of each row, similarity descending then column ascending.

    ``sims`` must already have excluded entries set to ``-inf``.
    """
    rows, n = sims.shape
    if kk == 0:
        return np.empty((rows, 0), np.int64), np.empty((rows, 0))
    part = np.argpartition(-sims, kk - 1, axis=1)[:, :kk]
    kth = np.take_along_axis(sims, part, axis=1).min(axis=1)
    out_ids = np.empty((rows, kk), dtype=np.int64)
    for r in range(rows):
        cand = np.flatnonzero(sims[r] >= kth[r])
        # lexsort: last key is primary
        order = np.lexsort((cand, -sims[r, cand]))[:kk]
        out_ids[r] = cand[order]
    out_sims = np.take_along_axis(sims, out_ids, axis=1)
    return out_ids, np.clip(out_sims, -1.0, 1.0)


def _distinct_rows(x: np.ndarray):
    """Distinct rows and the column map back to ``x``, or ``(x, None)``.

    Scoring queries against distinct rows only gives duplicate words
    bit-identical similarities, which the id tie rule relies on; BLAS may
    round the same dot product differently in different output columns.
    """
    uniq, inverse = np.unique(x, axis=0, return_inverse=True)
    if len(uniq) == len(x):
        return x, None
    return np.ascontiguousarray(uniq), inverse.ravel()


def _block(x: np.ndarray, cols, start: int, stop: int, kk: int):
    uniq, inverse = cols
    sims = x[start:stop] @ uniq.T
    if inverse is not None:
        sims = sims[:, inverse]
    sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
    return _rank_rows(sims, kk)


def top_k_neighbors(e: EmbeddingSet, v: int, k: int) -> list[tuple[int, float]]:
    if k < 1:
        raise KZero(f"k must be >= 1, got {k}")
    n = len(e)
    if not 0 <= v < n:
        raise UnknownWord(f"word id {v} out of range")
    x = _as_normalized(e).matrix
    kk = min(k, n - 1)
    ids, sims = _block(x, _distinct_rows(x), v, v + 1, kk)
    return list(zip(ids[0].tolist(), sims[0].tolist()))


def default_workers() -> int:
    env = os.environ.get("SECONDORDER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def all_neighbors(e: EmbeddingSet, k: int, workers: int | None = None) -> NeighborList:
    """k nearest neighbours of every word.

    Work is split into fixed row blocks regardless of ``workers``, so the
    result does not depend on the degree of parallelism.
    """
    if k < 1:
        raise KZero(f"k must be >= 1, got {k}")
    x = np.ascontiguousarray(_as_normalized(e).matrix)
    n = len(e)
    kk = min(k, max(n - 1, 0))
    cols = _distinct_rows(x) if n else (x, None)
    bounds = [(s, min(s + BLOCK_ROWS, n)) for s in range(0, n, BLOCK_ROWS)]
    workers = workers or default_workers()
    if workers == 1 or len(bounds) <= 1:
        parts = [_block(x, cols, s, t, kk) for s, t in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block(x, cols, b[0], b[1], kk), bounds))
    if parts:
        ids = np.vstack([p[0] for p in parts])
        sims = np.vstack([p[1] for p in parts])
    else:
        ids = np.empty((0, kk), np.int64)
        sims = np.empty((0, kk))
    return NeighborList(e.vocab, k, ids, sims)


def save_neighbors(nn: NeighborList, path) -> None:
    """TSV of ``word, neighbour, similarity`` rows in rank order."""
    words = nn.vocab.words
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for v, w in enumerate(words):
                for t, s in zip(nn.ids[v], nn.sims[v]):
                    fh.write(f"{w}\t{words[t]}\t{s:.6f}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_neighbors(path, k: int | None = None) -> NeighborList:
    """Read a neighbour TSV written by :func:`save_neighbors`.

    The vocabulary is the sequence of distinct query words in file order;
    every word must have the same number of neighbours.
    """
    rows: dict[str, list[tuple[str, float]]] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise MalformedLine(lineno, "expected 3 tab-separated fields")
                try:
                    s = float(parts[2])
                except ValueError:
                    raise MalformedLine(lineno, "similarity is not a number") from None
                if not (math.isfinite(s) and -1.0 <= s <= 1.0):
                    raise MalformedLine(lineno, "similarity outside [-1, 1]")
                rows.setdefault(parts[0], []).append((parts[1], s))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    vocab = Vocabulary(rows)
    sizes = {len(v) for v in rows.values()}
    if len(sizes) > 1:
        raise DataError(f"{path}: words have differing neighbour counts {sorted(sizes)}")
    kk = sizes.pop() if sizes else 0
    ids = np.empty((len(vocab), kk), dtype=np.int64)
    sims = np.empty((len(vocab), kk))
    for v, w in enumerate(vocab):
        for j, (t, s) in enumerate(rows[w]):
            if t not in vocab.index:
                raise DataError(f"{path}: neighbour {t!r} of {w!r} is not a query word")
            ids[v, j] = vocab.index[t]
            sims[v, j] = s
    return NeighborList(vocab, k if k is not None else kk, ids, sims)
