"""Linear paraphrase recognition with additive sentence vectors.

Sentences are summed word vectors (out-of-vocabulary tokens skipped); a pair
is represented by the concatenation or the difference of its two sentence
vectors and classified with L2-regularized logistic regression.

The objective follows the LIBLINEAR convention, where the cost ``C``
multiplies the data term rather than the regularizer::

    0.5 * ||w||^2 + C * sum_i log(1 + exp(-y_i * (w . x_i + b)))

with ``y_i`` in {-1, +1} and an unpenalized intercept ``b``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embed_io import EmbeddingSet
from .errors import (
    DimMismatch,
    IoFailure,
    LengthMismatch,
    MalformedRow,
    NonFiniteFeature,
    SingleClass,
)

MODES = ("concat", "subtract")


@dataclass(frozen=True)
class SentencePair:
    sentence_a: tuple
    sentence_b: tuple
    label: bool


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip surrounding punctuation."""
    out = []
    for tok in text.lower().split():
        tok = tok.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def ingest_msrpc(path) -> list[SentencePair]:
    """Read an MSRPC-style TSV: header, then ``label, id1, id2, s1, s2``."""
    pairs = []
    try:
        with open(path, "r", encoding="utf-8-sig") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines[1:], 2):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise MalformedRow(lineno, f"expected 5 columns, got {len(cols)}")
        if cols[0].strip() not in ("0", "1"):
            raise MalformedRow(lineno, f"label must be 0 or 1, got {cols[0]!r}")
        pairs.append(SentencePair(tuple(tokenize(cols[3])), tuple(tokenize(cols[4])), cols[0].strip() == "1"))
    return pairs


def compose_sentence(e: EmbeddingSet, tokens: Sequence[str]) -> np.ndarray:
    out = np.zeros(e.dim)
    index = e.vocab.index
    for tok in tokens:
        i = index.get(tok)
        if i is not None:
            out += e.matrix[i]
    return out


def pair_features(va, vb, mode: str = "concat") -> np.ndarray:
    va = np.asarray(va, dtype=np.float64)
    vb = np.asarray(vb, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimMismatch(f"sentence vectors have shapes {va.shape} and {vb.shape}")
    if mode == "concat":
        return np.concatenate([va, vb])
    if mode == "subtract":
        return va - vb
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def featurize(e: EmbeddingSet, pairs: Sequence[SentencePair], mode: str):
    """Feature matrix, 0/1 labels, and the number of sentences with no known word."""
    rows = []
    all_oov = 0
    index = e.vocab.index
    for pair in pairs:
        for sent in (pair.sentence_a, pair.sentence_b):
            if not any(t in index for t in sent):
                all_oov += 1
        rows.append(pair_features(compose_sentence(e, pair.sentence_a), compose_sentence(e, pair.sentence_b), mode))
    width = e.dim * (2 if mode == "concat" else 1)
    x = np.array(rows).reshape(len(rows), width)
    y = np.array([int(p.label) for p in pairs], dtype=np.int64)
    return x, y, all_oov


def _signs(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.dtype == bool:
        y = y.astype(np.int64)
    y = y.astype(np.float64)
    if np.all(np.isin(y, (0.0, 1.0))):
        return 2.0 * y - 1.0
    if np.all(np.isin(y, (-1.0, 1.0))):
        return y
    raise ValueError("labels must be 0/1 or -1/+1")


def logreg_objective(w, b, x, y, cost):
    """Objective value and its gradients w.r.t. ``w`` and ``b``; ``y`` in {-1, +1}."""
    margins = y * (x @ w + b)
    value = 0.5 * float(w @ w) + cost * float(np.sum(np.logaddexp(0.0, -margins)))
    # d/dm log(1+exp(-m)) = -sigmoid(-m)
    coef = -cost * y * _sigmoid(-margins)
    return value, w + x.T @ coef, float(coef.sum())


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    cost: float
    iterations: int = 0
    converged: bool = False
    objective: float = float("nan")

    def decision_function(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, x) -> np.ndarray:
        return _sigmoid(np.atleast_1d(self.decision_function(x)))

    def predict(self, x, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(x) >= threshold).astype(np.int64)


def train_logreg(features, labels, cost: float = 0.001, tol: float = 1e-6, max_iter: int = 10_000) -> LogRegModel:
    """Gradient descent with Armijo backtracking.

    Trial steps start from the Barzilai-Borwein estimate of the previous
    iteration.  Stops when the gradient norm drops below ``tol``.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = _signs(labels)
    if len(y) != len(x):
        raise LengthMismatch(f"{len(x)} feature rows but {len(y)} labels")
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeature("features contain NaN or infinity")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClass("training data must contain both classes")
    if not cost > 0:
        raise ValueError("cost must be positive")

    theta = np.zeros(x.shape[1] + 1)

    def evaluate(t):
        val, gw, gb = logreg_objective(t[:-1], t[-1], x, y, cost)
        return val, np.append(gw, gb)

    value, grad = evaluate(theta)
    step = 1.0
    it = 0
    converged = False
    while it < max_iter:
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) <= tol:
            converged = True
            break
        while True:
            cand = theta - step * grad
            cand_value, cand_grad = evaluate(cand)
            if cand_value <= value - 1e-4 * step * gnorm2 or step < 1e-20:
                break
            step *= 0.5
        s = cand - theta
        r = cand_grad - grad
        theta, value, grad = cand, cand_value, cand_grad
        it += 1
        sr = float(s @ r)
        step = float(s @ s) / sr if sr > 0 else min(step * 2.0, 1.0)
    return LogRegModel(theta[:-1].copy(), float(theta[-1]), cost, it, converged, value)


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "flags": list(self.flags),
        }


def evaluate_prf(predictions, gold) -> PRF:
    """Scores with "equivalent" (truthy) as the positive class.

    A metric with a zero denominator is reported as 0 and flagged.
    """
    pred = np.asarray(predictions).astype(bool)
    ref = np.asarray(gold).astype(bool)
    if pred.shape != ref.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {ref.size} gold labels")
    tp = int(np.sum(pred & ref))
    fp = int(np.sum(pred & ~ref))
    fn = int(np.sum(~pred & ref))
    tn = int(np.sum(~pred & ~ref))
    flags = []
    if tp + fp:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if tp + fn:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    if precision + recall:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1_undefined")
    accuracy = (tp + tn) / pred.size if pred.size else 0.0
    return PRF(precision, recall, f1, accuracy, tp, fp, fn, tn, flags)


def run_paraphrase(
    e: EmbeddingSet,
    train_pairs: Sequence[SentencePair],
    test_pairs: Sequence[SentencePair],
    mode: str = "concat",
    cost: float = 0.001,
    threshold: float = 0.5,
) -> dict:
    x_train, y_train, oov_train = featurize(e, train_pairs, mode)
    x_test, y_test, oov_test = featurize(e, test_pairs, mode)
    model = train_logreg(x_train, y_train, cost)
    scores = evaluate_prf(model.predict(x_test, threshold), y_test)
    return {
        "mode": mode,
        "cost": cost,
        "threshold": threshold,
        "train_pairs": len(train_pairs),
        "test_pairs": len(test_pairs),
        "all_oov_sentences": {"train": oov_train, "test": oov_test},
        "optimizer": {"iterations": model.iterations, "converged": model.converged, "objective": model.objective},
        **scores.as_dict(),
    }
