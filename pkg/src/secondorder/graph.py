"""Directed k-NN graph over a vocabulary, stored as CSR.

With ``S`` neighbour samples the edge ``v -> w`` exists when ``w`` is among
the neighbours of ``v`` in at least one sample and carries weight
``count / S``, where ``count`` is the number of samples that contain it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .embed_io import Vocabulary
from .errors import DataError, IoFailure, KMismatch, MalformedLine, VocabMismatch
from .knn import NeighborList


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    vocab: Vocabulary
    offsets: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    samples: int | None = 1

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64)
        targets = np.asarray(self.targets, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        n = len(self.vocab)
        if offsets.shape != (n + 1,) or offsets[0] != 0 or offsets[-1] != len(targets):
            raise DataError("CSR offsets inconsistent with node/edge counts")
        if targets.shape != weights.shape:
            raise DataError("targets and weights differ in length")
        if np.any(np.diff(offsets) < 0):
            raise DataError("CSR offsets must be non-decreasing")
        for a in (offsets, targets, weights):
            a.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return len(self.vocab)

    @property
    def num_edges(self) -> int:
        return len(self.targets)

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def out_degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.targets, minlength=self.n)

    def neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v] : self.offsets[v + 1]]

    def edge_weights(self, v: int) -> np.ndarray:
        return self.weights[self.offsets[v] : self.offsets[v + 1]]

    def has_edge(self, v: int, w: int) -> bool:
        lo, hi = self.offsets[v], self.offsets[v + 1]
        i = lo + np.searchsorted(self.targets[lo:hi], w)
        return bool(i < hi and self.targets[i] == w)

    def weight(self, v: int, w: int) -> float:
        lo, hi = self.offsets[v], self.offsets[v + 1]
        i = lo + np.searchsorted(self.targets[lo:hi], w)
        if i < hi and self.targets[i] == w:
            return float(self.weights[i])
        return 0.0

    def edges(self):
        """Yield ``(src, dst, weight)`` sorted by ``(src, dst)``."""
        for v in range(self.n):
            for i in range(self.offsets[v], self.offsets[v + 1]):
                yield v, int(self.targets[i]), float(self.weights[i])

    @classmethod
    def from_edges(cls, vocab: Vocabulary, edges, samples: int | None = 1) -> "WeightedDigraph":
        """Build from ``(src, dst, weight)`` triples; duplicate pairs are rejected."""
        edges = sorted(edges)
        for a, b in zip(edges, edges[1:]):
            if a[:2] == b[:2]:
                raise DataError(f"duplicate edge {a[0]} -> {a[1]}")
        n = len(vocab)
        src = np.array([e[0] for e in edges], dtype=np.int64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        return cls(
            vocab,
            offsets,
            np.array([e[1] for e in edges], dtype=np.int64),
            np.array([e[2] for e in edges], dtype=np.float64),
            samples,
        )


def induce_single(nn: NeighborList) -> WeightedDigraph:
    return induce_multi([nn])


def induce_multi(nns: Sequence[NeighborList]) -> WeightedDigraph:
    if not nns:
        raise DataError("at least one neighbour sample is required")
    vocab = nns[0].vocab
    k = nns[0].k
    for nn in nns[1:]:
        if nn.vocab != vocab:
            raise VocabMismatch("neighbour samples are over different vocabularies")
        if nn.k != k:
            raise KMismatch(f"neighbour samples use different k ({k} vs {nn.k})")
    s = len(nns)
    n = len(vocab)
    if n == 0:
        return WeightedDigraph(vocab, np.zeros(1, np.int64), [], [], s)

    # count each (src, dst) pair across samples
    src = np.concatenate([np.repeat(np.arange(n), nn.ids.shape[1]) for nn in nns])
    dst = np.concatenate([nn.ids.ravel() for nn in nns])
    if np.any(src == dst):
        raise DataError("neighbour lists contain a self-reference")
    for nn in nns:
        row_unique = np.sort(nn.ids, axis=1)
        if row_unique.shape[1] > 1 and np.any(row_unique[:, 1:] == row_unique[:, :-1]):
            raise DataError("neighbour list repeats a word")
    keys = src * n + dst
    uniq, counts = np.unique(keys, return_counts=True)
    edge_src = uniq // n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(edge_src, minlength=n), out=offsets[1:])
    return WeightedDigraph(vocab, offsets, uniq % n, counts / s, s)


@dataclass(frozen=True, eq=False)
class AliasTable:
    """Per-node alias tables laid out parallel to the graph's CSR edge arrays.

    ``alias`` holds node-local positions, so a draw at node ``v`` returns
    ``targets[offsets[v] + j]`` for some ``0 <= j < out_degree(v)``.
    """

    offsets: np.ndarray
    targets: np.ndarray
    prob: np.ndarray
    alias: np.ndarray

    def draw(self, node: int, u: float) -> int:
        """Sample an out-neighbour of ``node`` from one uniform ``u`` in [0, 1)."""
        lo = self.offsets[node]
        deg = self.offsets[node + 1] - lo
        if deg == 0:
            return -1
        x = u * deg
        j = int(x)
        if j >= deg:
            j = deg - 1
        if x - j < self.prob[lo + j]:
            return int(self.targets[lo + j])
        return int(self.targets[lo + self.alias[lo + j]])

    def distribution(self, node: int) -> np.ndarray:
        """Exact probability of each out-edge implied by the table."""
        lo, hi = self.offsets[node], self.offsets[node + 1]
        deg = hi - lo
        out = np.zeros(deg)
        for j in range(deg):
            out[j] += self.prob[lo + j] / deg
            out[self.alias[lo + j]] += (1.0 - self.prob[lo + j]) / deg
        return out


def alias_setup(weights) -> tuple[np.ndarray, np.ndarray]:
    """Vose's alias construction for one discrete distribution."""
    w = np.asarray(weights, dtype=np.float64)
    m = len(w)
    prob = np.ones(m)
    alias = np.arange(m, dtype=np.int64)
    if m == 0:
        return prob, alias
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise DataError("alias weights must be positive and finite")
    scaled = w * (m / w.sum())
    small = [i for i in range(m) if scaled[i] < 1.0]
    large = [i for i in range(m) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding
    for i in small + large:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


def build_alias_tables(g: WeightedDigraph) -> AliasTable:
    prob = np.ones(g.num_edges)
    alias = np.zeros(g.num_edges, dtype=np.int64)
    for v in range(g.n):
        lo, hi = g.offsets[v], g.offsets[v + 1]
        if hi > lo:
            prob[lo:hi], alias[lo:hi] = alias_setup(g.weights[lo:hi])
    return AliasTable(g.offsets, g.targets, prob, alias)


def _format_weight(w: float) -> str:
    return repr(float(w))


def save_graph(g: WeightedDigraph, path) -> None:
    words = g.vocab.words
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for v, w, wt in g.edges():
                fh.write(f"{words[v]}\t{words[w]}\t{_format_weight(wt)}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _infer_samples(weights: np.ndarray, max_samples: int = 1000) -> int | None:
    if len(weights) == 0:
        return None
    denoms = {Fraction(float(w)).limit_denominator(max_samples).denominator for w in np.unique(weights)}
    s = 1
    for d in denoms:
        s = s * d // math.gcd(s, d)
    if s > max_samples:
        return None
    if np.all(np.abs(weights * s - np.round(weights * s)) < 1e-9):
        return s
    return None


def load_graph(path) -> WeightedDigraph:
    """Read a ``src \\t dst \\t weight`` edge list.

    Node ids follow first appearance (sources before their targets), which
    reproduces the original vocabulary for graphs written by
    :func:`save_graph` whenever every node has an out-edge.
    """
    triples = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or not parts[0] or not parts[1]:
                    raise MalformedLine(lineno, "expected 'src<TAB>dst<TAB>weight'")
                try:
                    wt = float(parts[2])
                except ValueError:
                    raise MalformedLine(lineno, "weight is not a number") from None
                if not (math.isfinite(wt) and 0.0 < wt <= 1.0):
                    raise MalformedLine(lineno, "weight must lie in (0, 1]")
                if parts[0] == parts[1]:
                    raise MalformedLine(lineno, "self-loop")
                triples.append((parts[0], parts[1], wt))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    words: dict[str, int] = {}
    for s, _, _ in triples:
        words.setdefault(s, len(words))
    for _, t, _ in triples:
        words.setdefault(t, len(words))
    vocab = Vocabulary(words)
    edges = [(words[s], words[t], wt) for s, t, wt in triples]
    g = WeightedDigraph.from_edges(vocab, edges, None)
    object.__setattr__(g, "samples", _infer_samples(g.weights))
    return g
