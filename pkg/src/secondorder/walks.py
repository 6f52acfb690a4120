"""Second-order biased random walks over a weighted digraph.

From ``cur`` reached via ``prev``, the next node ``x`` is chosen with
probability proportional to ``weight(cur, x) * bias(prev, x)`` where the bias
is ``1/p`` for ``x == prev``, ``1`` when the edge ``prev -> x`` exists and
``1/q`` otherwise.  The first step of a walk uses edge weights alone.

Sampling draws a candidate from the per-node alias table and accepts it
with probability ``bias / max_bias``, which reproduces the distribution above
exactly without precomputing per-edge tables.

Every walk owns an RNG stream keyed by ``(seed, start, walk_index)`` so the
corpus does not depend on how walks are distributed over workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embed_io import Vocabulary
from .errors import DanglingNode, DataError, IoFailure
from .graph import AliasTable, WeightedDigraph, build_alias_tables

_WALK_STREAM = 1
_SHUFFLE_STREAM = 0


@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_node: int = 10
    seed: int = 1

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise DataError("p and q must be positive")
        if self.walk_length < 1:
            raise DataError("walk_length must be >= 1")
        if self.walks_per_node < 1:
            raise DataError("walks_per_node must be >= 1")
        if self.seed < 0:
            raise DataError("seed must be non-negative")


@dataclass
class WalkCorpus:
    vocab: Vocabulary
    walks: list = field(default_factory=list)

    def __len__(self):
        return len(self.walks)

    def sentences(self):
        """Walks as token lists."""
        words = self.vocab.words
        return [[words[i] for i in walk] for walk in self.walks]

    def num_tokens(self) -> int:
        return sum(len(w) for w in self.walks)


def _bias(g: WeightedDigraph, prev: int, x: int, p: float, q: float) -> float:
    if x == prev:
        return 1.0 / p
    if g.has_edge(prev, x):
        return 1.0
    return 1.0 / q


def transition_distribution(g: WeightedDigraph, prev: int | None, cur: int, p: float, q: float):
    """Return ``(candidates, probabilities)`` for the step out of ``cur``.

    ``prev=None`` gives the first-step distribution.
    """
    nbrs = g.neighbors(cur)
    if len(nbrs) == 0:
        raise DanglingNode(f"node {cur} has no out-edges")
    w = g.edge_weights(cur).astype(np.float64)
    if prev is not None:
        w = w * np.array([_bias(g, prev, int(x), p, q) for x in nbrs])
    return nbrs.copy(), w / w.sum()


def walk_rng(seed: int, start: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_WALK_STREAM, start, index)))


def sample_next(g, table: AliasTable, prev, cur, p, q, max_bias, rng) -> int:
    if prev is None or (p == 1.0 and q == 1.0):
        return table.draw(cur, rng.random())
    while True:
        x = table.draw(cur, rng.random())
        b = _bias(g, prev, x, p, q)
        if b == max_bias or rng.random() * max_bias < b:
            return x


def generate_walk(
    g: WeightedDigraph,
    start: int,
    cfg: WalkConfig,
    rng: np.random.Generator,
    table: AliasTable | None = None,
) -> list[int]:
    if not 0 <= start < g.n:
        raise DataError(f"start node {start} out of range")
    if table is None:
        table = build_alias_tables(g)
    p, q = cfg.p, cfg.q
    max_bias = max(1.0 / p, 1.0, 1.0 / q)
    offsets = g.offsets
    walk = [start]
    prev = None
    cur = start
    while len(walk) < cfg.walk_length:
        if offsets[cur + 1] == offsets[cur]:
            break
        nxt = sample_next(g, table, prev, cur, p, q, max_bias, rng)
        walk.append(nxt)
        prev, cur = cur, nxt
    return walk


def _run_chunk(args):
    g, table, cfg, jobs = args
    return [generate_walk(g, s, cfg, walk_rng(cfg.seed, s, r), table) for s, r in jobs]


def walk_schedule(n: int, cfg: WalkConfig) -> list[tuple[int, int]]:
    """``(start, walk_index)`` pairs in corpus order: one shuffled pass per index."""
    jobs = []
    for r in range(cfg.walks_per_node):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(_SHUFFLE_STREAM, r)))
        jobs.extend((int(s), r) for s in rng.permutation(n))
    return jobs


def generate_corpus(g: WeightedDigraph, cfg: WalkConfig, workers: int = 1) -> WalkCorpus:
    table = build_alias_tables(g)
    jobs = walk_schedule(g.n, cfg)
    if workers <= 1 or len(jobs) < 2 * workers:
        walks = _run_chunk((g, table, cfg, jobs))
    else:
        size = -(-len(jobs) // workers)
        chunks = [(g, table, cfg, jobs[i : i + size]) for i in range(0, len(jobs), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            walks = [w for part in pool.map(_run_chunk, chunks) for w in part]
    return WalkCorpus(g.vocab, walks)


def save_corpus(corpus: WalkCorpus, path) -> None:
    words = corpus.vocab.words
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for walk in corpus.walks:
                fh.write(" ".join(words[i] for i in walk))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc

