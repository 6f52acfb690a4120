"""Embedding sets and the word2vec text interchange format.

The format is a header line ``"<n> <d>"`` followed by ``n`` lines of
``"<token> <d floats>"`` separated by single spaces.  Values are stored as
float64 and written with ``repr`` so a save/load cycle is lossless.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    DimensionMismatch,
    DuplicateToken,
    EmptySet,
    IoFailure,
    MalformedHeader,
    NonFiniteValue,
    UnknownWord,
    ZeroVector,
)

NORM_TOLERANCE = 1e-6


class Vocabulary:
    """Ordered, duplicate-free list of tokens with a dense 0-based index."""

    __slots__ = ("words", "index")

    def __init__(self, words: Iterable[str]):
        self.words = tuple(words)
        self.index = {}
        for i, w in enumerate(self.words):
            if w in self.index:
                raise DuplicateToken(w)
            self.index[w] = i

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, i):
        return self.words[i]

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words

    def __hash__(self):
        return hash(self.words)

    def __repr__(self):
        return f"Vocabulary({len(self)} words)"

    def id(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise UnknownWord(f"unknown word {word!r}") from None


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    vocab: Vocabulary
    matrix: np.ndarray
    normalized: bool = False
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2:
            raise DataError("embedding matrix must be 2-dimensional")
        if m.shape[0] != len(self.vocab):
            raise DataError(
                f"matrix has {m.shape[0]} rows but vocabulary has {len(self.vocab)} words"
            )
        if not np.all(np.isfinite(m)):
            bad = int(np.nonzero(~np.isfinite(m).all(axis=1))[0][0])
            raise NonFiniteValue(bad + 2)
        if self.normalized and m.shape[0]:
            norms = np.linalg.norm(m, axis=1)
            if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
                raise DataError("rows flagged normalized but are not unit length")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", m.shape[1])

    def __len__(self):
        return len(self.vocab)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and self.normalized == other.normalized
            and self.matrix.shape == other.matrix.shape
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab.id(word)]

    @classmethod
    def from_dict(cls, vectors: dict, normalized=False) -> "EmbeddingSet":
        words = list(vectors)
        return cls(Vocabulary(words), np.array([vectors[w] for w in words], dtype=np.float64), normalized)


def _check_token(token: str, lineno: int):
    if not token or any(ch.isspace() for ch in token):
        raise DataError(f"line {lineno}: token {token!r} is empty or contains whitespace")


def load_embeddings(path: str | os.PathLike) -> EmbeddingSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MalformedHeader("empty file")
    header = lines[0].rstrip("\r").split(" ")
    try:
        n, d = (int(x) for x in header)
    except ValueError:
        raise MalformedHeader(f"expected '<n> <d>', got {lines[0]!r}") from None
    if n < 0 or d < 1:
        raise MalformedHeader(f"invalid header values n={n} d={d}")
    if len(lines) - 1 != n:
        raise MalformedHeader(f"header declares {n} rows, file has {len(lines) - 1}")

    words = []
    matrix = np.empty((n, d), dtype=np.float64)
    seen = set()
    for i in range(n):
        lineno = i + 2
        # word2vec writers often leave a trailing space
        parts = lines[i + 1].rstrip("\r").rstrip(" ").split(" ")
        token = parts[0]
        _check_token(token, lineno)
        if len(parts) - 1 != d:
            raise DimensionMismatch(lineno, d, len(parts) - 1)
        if token in seen:
            raise DuplicateToken(token)
        seen.add(token)
        try:
            row = [float(x) for x in parts[1:]]
        except ValueError:
            raise DataError(f"line {lineno}: unparseable number") from None
        if not all(math.isfinite(x) for x in row):
            raise NonFiniteValue(lineno)
        matrix[i] = row
        words.append(token)
    return EmbeddingSet(Vocabulary(words), matrix)


def save_embeddings(e: EmbeddingSet, path: str | os.PathLike) -> None:
    if len(e) == 0:
        raise EmptySet("refusing to write an empty embedding set")
    for i, w in enumerate(e.vocab):
        _check_token(w, i + 2)
    out = [f"{len(e)} {e.dim}"]
    for w, row in zip(e.vocab, e.matrix):
        out.append(w + " " + " ".join(repr(float(x)) for x in row))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(out))
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def normalize_rows(e: EmbeddingSet) -> EmbeddingSet:
    norms = np.linalg.norm(e.matrix, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ZeroVector(int(zero[0]))
    return EmbeddingSet(e.vocab, e.matrix / norms[:, None], normalized=True)


def concatenate(sets: Sequence[EmbeddingSet]) -> EmbeddingSet:
    """Concatenate vectors word by word over the words present in every set.

    Word order follows the first set.
    """
    if not sets:
        raise EmptySet("nothing to concatenate")
    if len(sets) == 1:
        return sets[0]
    common = [w for w in sets[0].vocab if all(w in s.vocab for s in sets[1:])]
    if not common:
        raise EmptySet("embedding sets share no words")
    blocks = [s.matrix[[s.vocab.index[w] for w in common]] for s in sets]
    return EmbeddingSet(Vocabulary(common), np.hstack(blocks))
