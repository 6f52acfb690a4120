"""Skip-gram with negative sampling.

Each (center, context) pair inside a dynamically shrunk window makes one
positive update against the context's output vector and ``negatives``
updates against words drawn from the smoothed unigram distribution.  The
center's input vector receives the accumulated gradient after all of them.

The inner loop is compiled with numba.  With ``workers > 1`` the corpus is
split into contiguous shards processed by threads that update the shared
parameter matrices without locking; lost updates are tolerated.  With one
worker the run is bitwise reproducible from ``seed``.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .embed_io import EmbeddingSet, Vocabulary
from .errors import DataError, EmptyCorpus, EmptyVocabulary, IoFailure, NonFiniteLoss
from .walks import WalkCorpus

@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 100
    window: int = 8
    negatives: int = 5
    epochs: int = 10
    lr_start: float = 0.025
    lr_end: float = 0.0001
    min_count: int = 4
    unigram_power: float = 0.75
    sample: float = 0.0
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise DataError("dim, window and negatives must be >= 1")
        if self.epochs < 0:
            raise DataError("epochs must be >= 0")
        if not (self.lr_start >= self.lr_end > 0):
            raise DataError("need lr_start >= lr_end > 0")
        if self.min_count < 0 or self.sample < 0 or self.workers < 1 or self.seed < 0:
            raise DataError("invalid min_count, sample, workers or seed")


@dataclass(frozen=True)
class NegativeTable:
    ids: np.ndarray
    probs: np.ndarray
    cdf: np.ndarray

    def probability(self, word_id: int) -> float:
        hit = np.flatnonzero(self.ids == word_id)
        return float(self.probs[hit[0]]) if hit.size else 0.0

    def sample(self, u: float) -> int:
        i = min(int(np.searchsorted(self.cdf, u, side="right")), len(self.ids) - 1)
        return int(self.ids[i])


def build_negative_table(counts, cfg: SgnsConfig = SgnsConfig()) -> NegativeTable:
    """Noise distribution ``P(w) ~ count(w) ** power`` over words with count >= min_count.

    ``counts`` is a sequence indexed by word id or a mapping id -> count.
    """
    if isinstance(counts, Mapping):
        items = sorted(counts.items())
    else:
        items = list(enumerate(counts))
    kept = [(i, c) for i, c in items if c >= max(cfg.min_count, 1)]
    if not kept:
        raise EmptyVocabulary("no word meets min_count")
    ids = np.array([i for i, _ in kept], dtype=np.int64)
    weights = np.array([c for _, c in kept], dtype=np.float64) ** cfg.unigram_power
    probs = weights / weights.sum()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return NegativeTable(ids, probs, cdf)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x)) if x >= 0 else np.exp(x) / (1.0 + np.exp(x))


def sgns_pair_gradient(w_vec, c_vec, label: int):
    """Gradients of the pair loss w.r.t. both vectors, and the loss itself.

    loss is ``-log sigmoid(w.c)`` for ``label=1`` and ``-log sigmoid(-w.c)``
    for ``label=0``.
    """
    w_vec = np.asarray(w_vec, dtype=np.float64)
    c_vec = np.asarray(c_vec, dtype=np.float64)
    f = float(np.dot(w_vec, c_vec))
    coef = _sigmoid(f) - label
    z = f if label == 1 else -f
    loss = float(np.logaddexp(0.0, -z))
    return coef * c_vec, coef * w_vec, loss


@njit(cache=True, nogil=True)
def _neg_log_sigmoid(z):
    if z >= 0:
        return math.log1p(math.exp(-z))
    return -z + math.log1p(math.exp(z))


@njit(cache=True, nogil=True)
def _pair_update(syn0, syn1, center, target, label, lr, neu1e):
    """One SGD step on ``syn1[target]``; accumulates the center gradient into ``neu1e``."""
    d = syn0.shape[1]
    f = 0.0
    for t in range(d):
        f += syn0[center, t] * syn1[target, t]
    if f >= 0:
        s = 1.0 / (1.0 + math.exp(-f))
    else:
        e = math.exp(f)
        s = e / (1.0 + e)
    g = s - label
    for t in range(d):
        neu1e[t] += g * syn1[target, t]
        syn1[target, t] -= lr * g * syn0[center, t]
    if label == 1:
        return _neg_log_sigmoid(f)
    return _neg_log_sigmoid(-f)


@njit(cache=True, nogil=True)
def _train_shard(
    tokens, starts, s_lo, s_hi, syn0, syn1, neg_ids, neg_cdf, keep_prob,
    window, negatives, lr_start, lr_end, total_work, done_offset, progress_scale, state,
):
    d = syn0.shape[1]
    neu1e = np.zeros(d)
    longest = 0
    for s in range(s_lo, s_hi):
        longest = max(longest, starts[s + 1] - starts[s])
    buf = np.empty(longest, dtype=np.int64)
    nneg = neg_ids.shape[0]
    loss = 0.0
    pairs = 0
    done = 0
    mul = np.uint64(25214903917)
    add = np.uint64(11)
    for s in range(s_lo, s_hi):
        m = 0
        for i in range(starts[s], starts[s + 1]):
            w = tokens[i]
            if keep_prob[w] < 1.0:
                state = state * mul + add
                u = float(state >> np.uint64(11)) * 1.1102230246251565e-16
                if u >= keep_prob[w]:
                    done += 1
                    continue
            buf[m] = w
            m += 1
        for i in range(m):
            progress = (done_offset + progress_scale * done) / total_work
            lr = lr_start - (lr_start - lr_end) * progress
            if lr < lr_end:
                lr = lr_end
            done += 1
            state = state * mul + add
            reduced = window - np.int64((state >> np.uint64(16)) % np.uint64(window))
            center = buf[i]
            lo = max(0, i - reduced)
            hi = min(m, i + reduced + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = buf[j]
                neu1e[:] = 0.0
                loss += _pair_update(syn0, syn1, center, ctx, 1, lr, neu1e)
                for _ in range(negatives):
                    t = ctx
                    for _attempt in range(2):
                        state = state * mul + add
                        u = float(state >> np.uint64(11)) * 1.1102230246251565e-16
                        k = np.searchsorted(neg_cdf, u, side="right")
                        if k >= nneg:
                            k = nneg - 1
                        t = neg_ids[k]
                        if t != ctx:
                            break
                    if t == ctx:
                        continue
                    loss += _pair_update(syn0, syn1, center, t, 0, lr, neu1e)
                for t in range(d):
                    syn0[center, t] -= lr * neu1e[t]
                pairs += 1
    return loss, pairs, state


def build_vocab(sentences: Iterable[Sequence[str]], min_count: int = 1):
    """Vocabulary sorted by descending count, ties by first appearance."""
    counts: Counter = Counter()
    first: dict[str, int] = {}
    for sent in sentences:
        for tok in sent:
            counts[tok] += 1
            if tok not in first:
                first[tok] = len(first)
    kept = [w for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda w: (-counts[w], first[w]))
    return Vocabulary(kept), np.array([counts[w] for w in kept], dtype=np.int64)


def read_corpus(path) -> list[list[str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return [line.split() for line in fh]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


@dataclass
class SgnsModel:
    vocab: Vocabulary
    counts: np.ndarray
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    epoch_losses: list = field(default_factory=list)

    def embeddings(self) -> EmbeddingSet:
        return EmbeddingSet(self.vocab, self.input_vectors)


def _keep_probabilities(counts: np.ndarray, sample: float) -> np.ndarray:
    if sample <= 0:
        return np.ones(len(counts))
    threshold = sample * counts.sum()
    keep = (np.sqrt(counts / threshold) + 1.0) * threshold / counts
    return np.minimum(keep, 1.0)


def _shard_bounds(starts: np.ndarray, shards: int) -> list[tuple[int, int]]:
    """Split sentences into ``shards`` runs of roughly equal token count."""
    nsent = len(starts) - 1
    total = starts[-1]
    cuts = [0]
    for i in range(1, shards):
        cuts.append(int(np.searchsorted(starts, total * i / shards)))
    cuts.append(nsent)
    cuts = sorted(set(min(max(c, 0), nsent) for c in cuts))
    return [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a]


def _shard_seed(seed: int, epoch: int, shard: int) -> np.uint64:
    return np.random.SeedSequence(seed, spawn_key=(epoch, shard)).generate_state(1, np.uint64)[0]


def fit(corpus, cfg: SgnsConfig = SgnsConfig()) -> SgnsModel:
    """Train and return the full model, including per-epoch mean pair losses."""
    sentences = corpus.sentences() if isinstance(corpus, WalkCorpus) else corpus
    sentences = [list(s) for s in sentences]
    vocab, counts = build_vocab(sentences, cfg.min_count)
    if len(vocab) == 0:
        raise EmptyCorpus("corpus is empty after min_count filtering")
    table = build_negative_table(counts, cfg)

    index = vocab.index
    encoded = [[index[t] for t in s if t in index] for s in sentences]
    starts = np.zeros(len(encoded) + 1, dtype=np.int64)
    np.cumsum([len(s) for s in encoded], out=starts[1:])
    tokens = np.fromiter((t for s in encoded for t in s), dtype=np.int64, count=int(starts[-1]))
    n_tokens = int(starts[-1])

    n, d = len(vocab), cfg.dim
    init_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**31,)))
    syn0 = (init_rng.random((n, d)) - 0.5) / d
    syn1 = np.zeros((n, d))
    model = SgnsModel(vocab, counts, syn0, syn1)
    if cfg.epochs == 0:
        return model

    keep = _keep_probabilities(counts.astype(np.float64), cfg.sample)
    total_work = float(max(cfg.epochs * n_tokens, 1))
    bounds = _shard_bounds(starts, cfg.workers)

    for epoch in range(cfg.epochs):
        offset = float(epoch * n_tokens)

        def run(item):
            shard, (a, b) = item
            scale = float(len(bounds))
            loss, pairs, _ = _train_shard(
                tokens, starts, a, b, syn0, syn1, table.ids, table.cdf, keep,
                cfg.window, cfg.negatives, cfg.lr_start, cfg.lr_end,
                total_work, offset, scale, _shard_seed(cfg.seed, epoch, shard),
            )
            return loss, pairs

        if len(bounds) == 1:
            results = [run((0, bounds[0]))]
        else:
            with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
                results = list(pool.map(run, enumerate(bounds)))
        loss = sum(r[0] for r in results)
        pairs = sum(r[1] for r in results)
        mean = loss / pairs if pairs else 0.0
        if not math.isfinite(mean) or not np.all(np.isfinite(syn0)) or not np.all(np.isfinite(syn1)):
            raise NonFiniteLoss(
                f"epoch {epoch + 1}: non-finite loss or parameters "
                f"(mean loss {mean}, lr_start {cfg.lr_start}); try a smaller learning rate"
            )
        model.epoch_losses.append(mean)
    return model


def train(corpus, cfg: SgnsConfig = SgnsConfig()) -> EmbeddingSet:
    """Input vectors of a trained model as an embedding set."""
    return fit(corpus, cfg).embeddings()
