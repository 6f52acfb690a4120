import numpy as np
import pytest
from scipy.optimize import minimize

from secondorder.embed_io import EmbeddingSet
from secondorder.errors import DimMismatch, LengthMismatch, MalformedRow, NonFiniteFeature, SingleClass
from secondorder.paraphrase import (
    compose_sentence,
    evaluate_prf,
    featurize,
    ingest_msrpc,
    logreg_objective,
    pair_features,
    run_paraphrase,
    tokenize,
    train_logreg,
)

from conftest import toy_paraphrase_data


@pytest.fixture
def ab():
    return EmbeddingSet.from_dict({"a": [1.0, 0.0], "b": [0.0, 1.0]})


def test_compose(ab):
    np.testing.assert_array_equal(compose_sentence(ab, ["a", "b"]), [1, 1])
    np.testing.assert_array_equal(compose_sentence(ab, ["a", "UNKNOWN"]), [1, 0])
    np.testing.assert_array_equal(compose_sentence(ab, []), [0, 0])
    np.testing.assert_array_equal(compose_sentence(ab, ["b", "a", "a"]), compose_sentence(ab, ["a", "b", "a"]))


def test_pair_features():
    np.testing.assert_array_equal(pair_features([1, 0], [0, 1], "concat"), [1, 0, 0, 1])
    np.testing.assert_array_equal(pair_features([2, 3], [1, 1], "subtract"), [1, 2])
    v = np.array([0.3, -2.0])
    np.testing.assert_array_equal(pair_features(v, v, "subtract"), [0, 0])
    r = np.random.default_rng(1)
    a, b = r.normal(size=5), r.normal(size=5)
    np.testing.assert_array_equal(pair_features(a, b, "subtract"), -pair_features(b, a, "subtract"))
    with pytest.raises(DimMismatch):
        pair_features([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        pair_features([1], [1], "multiply")


def test_all_oov_flagged(ab):
    from secondorder.paraphrase import SentencePair

    _, _, oov = featurize(ab, [SentencePair(("zz",), ("a",), True)], "concat")
    assert oov == 1


def test_objective_gradient_finite_differences():
    r = np.random.default_rng(0)
    h = 1e-5
    for _ in range(10):
        x = r.normal(size=(25, 4))
        y = np.where(r.random(25) < 0.5, -1.0, 1.0)
        w, b, cost = r.normal(size=4), float(r.normal()), float(r.uniform(0.01, 2))
        _, gw, gb = logreg_objective(w, b, x, y, cost)
        theta = np.append(w, b)
        num = np.zeros(5)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            hi = logreg_objective((theta + e)[:4], (theta + e)[4], x, y, cost)[0]
            lo = logreg_objective((theta - e)[:4], (theta - e)[4], x, y, cost)[0]
            num[i] = (hi - lo) / (2 * h)
        ana = np.append(gw, gb)
        assert np.linalg.norm(ana - num) / np.linalg.norm(num) < 1e-6


def test_separable_1d():
    model = train_logreg([[-1.0], [1.0]], [0, 1], cost=1.0)
    assert model.converged
    assert model.predict([[-1.0], [1.0]]).tolist() == [0, 1]


def test_small_cost_approaches_prior():
    r = np.random.default_rng(2)
    x = r.normal(size=(60, 3))
    y = (r.random(60) < 0.7).astype(int)
    norms, gaps = [], []
    for cost in (1e-2, 1e-3, 1e-4):
        model = train_logreg(x, y, cost=cost)
        norms.append(np.linalg.norm(model.weights))
        gaps.append(np.abs(model.predict_proba(x) - y.mean()).max())
    assert norms[0] > norms[1] > norms[2] and norms[2] < 1e-2
    assert gaps[0] > gaps[2] and gaps[2] < 1e-2


def test_matches_reference_optimizer():
    r = np.random.default_rng(3)
    x = r.normal(size=(120, 6)) * 3
    y = (x @ r.normal(size=6) + r.normal(size=120) > 0).astype(int)
    cost = 0.05
    model = train_logreg(x, y, cost=cost)
    assert model.converged
    ys = 2.0 * y - 1
    ref = minimize(
        lambda t: logreg_objective(t[:-1], t[-1], x, ys, cost)[0],
        np.zeros(7),
        jac=lambda t: np.append(*logreg_objective(t[:-1], t[-1], x, ys, cost)[1:]),
        method="BFGS",
        options={"gtol": 1e-10},
    )
    assert model.objective <= ref.fun + 1e-9
    np.testing.assert_allclose(np.append(model.weights, model.bias), ref.x, atol=1e-5)
    zero = logreg_objective(np.zeros(6), 0.0, x, ys, cost)[0]
    assert model.objective <= zero


def test_logreg_errors():
    with pytest.raises(SingleClass):
        train_logreg([[1.0], [2.0]], [1, 1])
    with pytest.raises(NonFiniteFeature):
        train_logreg([[np.nan], [2.0]], [0, 1])
    with pytest.raises(LengthMismatch):
        train_logreg([[1.0], [2.0]], [0, 1, 1])


def confusion_oracle(pred, gold):
    tp = sum(1 for p, g in zip(pred, gold) if p and g)
    fp = sum(1 for p, g in zip(pred, gold) if p and not g)
    fn = sum(1 for p, g in zip(pred, gold) if not p and g)
    tn = len(pred) - tp - fp - fn
    return tp, fp, fn, tn


def test_prf_examples():
    m = evaluate_prf([1, 1, 1, 0, 0], [1, 1, 0, 1, 0])
    assert (m.tp, m.fp, m.fn) == (2, 1, 1)
    assert m.precision == m.recall == m.f1 == pytest.approx(2 / 3)
    perfect = evaluate_prf([1, 0, 1], [1, 0, 1])
    assert perfect.precision == perfect.recall == perfect.f1 == perfect.accuracy == 1.0
    none = evaluate_prf([0, 0, 0], [1, 0, 1])
    assert none.precision == 0.0 and none.recall == 0.0
    assert "precision_undefined" in none.flags
    with pytest.raises(LengthMismatch):
        evaluate_prf([1], [1, 0])


def test_prf_matches_confusion_oracle():
    r = np.random.default_rng(4)
    for _ in range(50):
        pred = (r.random(40) < 0.6).tolist()
        gold = (r.random(40) < 0.6).tolist()
        tp, fp, fn, tn = confusion_oracle(pred, gold)
        m = evaluate_prf(pred, gold)
        assert (m.tp, m.fp, m.fn, m.tn) == (tp, fp, fn, tn)
        assert m.accuracy == (tp + tn) / 40
        p = tp / (tp + fp) if tp + fp else 0.0
        rc = tp / (tp + fn) if tp + fn else 0.0
        assert m.f1 == (2 * p * rc / (p + rc) if p + rc else 0.0)


def test_tokenize():
    assert tokenize('The "quick" Fox, jumped... over -- it.') == ["the", "quick", "fox", "jumped", "over", "it"]
    assert tokenize("U.S. isn't") == ["u.s", "isn't"]


MSRPC_SAMPLE = (
    "﻿Quality\t#1 ID\t#2 ID\t#1 String\t#2 String\n"
    "1\t702876\t702977\tAmrozi accused his brother.\tReferring to him, Amrozi accused his brother.\n"
    "0\t2108705\t2108831\tYucaipa owned Dominick's.\tYucaipa bought Dominick's in 1995.\n"
)


def test_ingest_msrpc(tmp_path):
    path = tmp_path / "train.txt"
    path.write_text(MSRPC_SAMPLE, encoding="utf-8")
    pairs = ingest_msrpc(path)
    assert len(pairs) == 2
    assert pairs[0].label and not pairs[1].label
    assert pairs[0].sentence_a == ("amrozi", "accused", "his", "brother")
    assert pairs[1].sentence_b[-1] == "1995"


def test_ingest_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("h\th\th\th\th\n1\t1\t2\tonly four\n")
    with pytest.raises(MalformedRow) as info:
        ingest_msrpc(path)
    assert info.value.line == 2


@pytest.mark.parametrize("mode", ["concat", "subtract"])
def test_run_paraphrase_report(mode):
    emb, pairs = toy_paraphrase_data()
    report = run_paraphrase(emb, pairs[:140], pairs[140:], mode=mode)
    assert report["train_pairs"] == 140 and report["test_pairs"] == 60
    assert 0.0 <= report["f1"] <= 1.0
    assert report["optimizer"]["converged"]
