"""Neighbourhood diagnostics for embedding spaces.

``density_report`` scores every word by its mean similarity to its k
nearest neighbours, takes the ``m`` words at each extreme, and pools the
similarities of their neighbour lists (``m * k`` values per end).
``neighborhood_overlap`` labels each neighbour of a word by how many
samples agree on it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .embed_io import EmbeddingSet
from .errors import DataError, IoFailure, UnknownWord, VocabMismatch, VocabTooSmall
from .knn import NeighborList

# Lowest pooled neighbour similarity at each end of the density comparison
# for 100-d skip-gram vectors trained on Gigaword and their k=10 second-order
# counterparts.  Kept as documentation, not asserted at desk scale.
GIGAWORD_REFERENCE_MIN = {"first_order": 0.24, "second_order": 0.75}


def mean_nn_similarity(e: EmbeddingSet, nn: NeighborList, v: int) -> float:
    if nn.vocab != e.vocab:
        raise VocabMismatch("neighbour list was computed over a different vocabulary")
    if not 0 <= v < len(nn):
        raise UnknownWord(f"word id {v} out of range")
    if nn.sims.shape[1] == 0:
        raise DataError(f"word {v} has no neighbours")
    return float(np.mean(nn.sims[v]))


def mean_nn_similarities(nn: NeighborList) -> np.ndarray:
    return nn.sims.mean(axis=1)


def summarize(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {
        "count": int(v.size),
        "min": float(v.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(v.max()),
    }


@dataclass
class DensityReport:
    words: tuple
    means: np.ndarray
    max_words: list = field(default_factory=list)
    min_words: list = field(default_factory=list)
    max_pooled: np.ndarray = field(default_factory=lambda: np.empty(0))
    min_pooled: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def m(self) -> int:
        return len(self.max_words)

    def summary(self) -> dict:
        return {"max": summarize(self.max_pooled), "min": summarize(self.min_pooled)}


def density_report(e: EmbeddingSet, nn: NeighborList, m: int = 10) -> DensityReport:
    if nn.vocab != e.vocab:
        raise VocabMismatch("neighbour list was computed over a different vocabulary")
    n = len(nn)
    if m < 0:
        raise DataError("m must be non-negative")
    if n < 2 * m:
        raise VocabTooSmall(f"need at least {2 * m} words for m={m}, have {n}")
    means = mean_nn_similarities(nn)
    report = DensityReport(nn.vocab.words, means)
    if m == 0 or nn.sims.shape[1] == 0:
        return report
    ids = np.arange(n)
    top = np.lexsort((ids, -means))[:m]
    bottom = np.lexsort((ids, means))[:m]
    report.max_words = top.tolist()
    report.min_words = bottom.tolist()
    report.max_pooled = nn.sims[top].ravel().copy()
    report.min_pooled = nn.sims[bottom].ravel().copy()
    return report


@dataclass
class OverlapRow:
    word: int
    samples: int
    counts: dict

    def label(self, w: int) -> str:
        c = self.counts[w]
        if c == self.samples:
            return "all"
        if c == 1:
            return "one"
        return "some"

    def partition(self) -> dict:
        cells = {"all": [], "some": [], "one": []}
        for w in sorted(self.counts):
            cells[self.label(w)].append(w)
        return cells

    def union_size(self) -> int:
        return len(self.counts)


def _check_same_vocab(nns: Sequence[NeighborList]):
    if not nns:
        raise DataError("at least one neighbour sample is required")
    for nn in nns[1:]:
        if nn.vocab != nns[0].vocab:
            raise VocabMismatch("neighbour samples are over different vocabularies")


def neighborhood_overlap(nns: Sequence[NeighborList], v: int) -> OverlapRow:
    _check_same_vocab(nns)
    if not 0 <= v < len(nns[0]):
        raise UnknownWord(f"word id {v} out of range")
    counts: dict[int, int] = {}
    for nn in nns:
        for w in nn.ids[v].tolist():
            counts[w] = counts.get(w, 0) + 1
    return OverlapRow(v, len(nns), counts)


def jaccard(a: set, b: set) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 1.0


@dataclass
class OverlapReport:
    rows: list
    mean_jaccard: np.ndarray

    def aggregate(self) -> dict:
        cells = {"all": 0, "some": 0, "one": 0}
        for row in self.rows:
            for name, members in row.partition().items():
                cells[name] += len(members)
        out = {"words": len(self.rows), **{f"{k}_total": v for k, v in cells.items()}}
        out["jaccard"] = summarize(self.mean_jaccard)
        return out


def overlap_report(nns: Sequence[NeighborList]) -> OverlapReport:
    """Overlap rows for every word plus mean pairwise Jaccard across samples."""
    _check_same_vocab(nns)
    n = len(nns[0])
    rows = [neighborhood_overlap(nns, v) for v in range(n)]
    jac = np.ones(n)
    if len(nns) > 1:
        for v in range(n):
            sets = [nn.neighbor_set(v) for nn in nns]
            jac[v] = np.mean([jaccard(a, b) for a, b in combinations(sets, 2)])
    return OverlapReport(rows, jac)


@dataclass
class DensityComparison:
    first: dict
    second: dict
    same_vocabulary: bool

    def deltas(self) -> dict:
        out = {}
        for end in ("min", "max"):
            for stat in ("min", "median"):
                a = self.first[end].get(stat)
                b = self.second[end].get(stat)
                if a is not None and b is not None:
                    out[f"{end}_end_{stat}"] = b - a
        return out

    def as_dict(self) -> dict:
        return {
            "first_order": self.first,
            "second_order": self.second,
            "deltas": self.deltas(),
            "same_vocabulary": self.same_vocabulary,
            "reference_min": GIGAWORD_REFERENCE_MIN,
        }

    def format(self) -> str:
        lines = ["space\tend\tmin\tmedian"]
        for name, rep in (("first", self.first), ("second", self.second)):
            for end in ("min", "max"):
                s = rep[end]
                if s.get("count"):
                    lines.append(f"{name}\t{end}\t{s['min']:.4f}\t{s['median']:.4f}")
        return "\n".join(lines)


def compare_density(first: DensityReport, second: DensityReport) -> DensityComparison:
    return DensityComparison(first.summary(), second.summary(), first.words == second.words)


def write_density(report: DensityReport, directory, prefix: str = "density") -> list[str]:
    """Write per-word means, the pooled samples and a text summary.

    Returns the written paths.
    """
    os.makedirs(directory, exist_ok=True)
    means_path = os.path.join(directory, f"{prefix}_means.tsv")
    pooled_path = os.path.join(directory, f"{prefix}_pooled.dat")
    summary_path = os.path.join(directory, f"{prefix}_summary.txt")
    try:
        with open(means_path, "w", encoding="utf-8") as fh:
            fh.write("word\tmean_similarity\n")
            for w, m in zip(report.words, report.means):
                fh.write(f"{w}\t{m:.6f}\n")
        # gnuplot-friendly: one block per end, separated by two blank lines
        with open(pooled_path, "w", encoding="utf-8") as fh:
            for end, values in (("min", report.min_pooled), ("max", report.max_pooled)):
                fh.write(f"# end={end}\n")
                for x in values:
                    fh.write(f"{x:.6f}\n")
                fh.write("\n\n")
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write(f"extremal words per end: {report.m}\n")
            for end, words in (("max", report.max_words), ("min", report.min_words)):
                fh.write(f"{end}: {' '.join(report.words[i] for i in words)}\n")
            for end, s in report.summary().items():
                fh.write(f"{end} pooled: " + " ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in s.items()) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write density report to {directory}: {exc}") from exc
    return [means_path, pooled_path, summary_path]


def write_overlap(report: OverlapReport, words, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("word\tall\tsome\tone\tmean_jaccard\n")
            for row, jac in zip(report.rows, report.mean_jaccard):
                cells = row.partition()
                fh.write(
                    words[row.word]
                    + "\t"
                    + "\t".join(",".join(words[i] for i in cells[c]) for c in ("all", "some", "one"))
                    + f"\t{jac:.6f}\n"
                )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
