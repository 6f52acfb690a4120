import numpy as np
import pytest

from secondorder.embed_io import EmbeddingSet, Vocabulary

ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_set(matrix, prefix="w"):
    matrix = np.asarray(matrix, dtype=np.float64)
    return EmbeddingSet(Vocabulary(f"{prefix}{i}" for i in range(len(matrix))), matrix)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_paraphrase_data(n_pairs=200, seed=0, dim=20):
    """Embeddings plus sentence pairs for the paraphrase harness.

    Every first sentence is drawn from a "core" word pool.  A positive
    second sentence copies it with at most 2 of 10 tokens swapped (>= 80%
    shared); a negative one keeps 2 tokens and draws the rest from a
    "distractor" pool whose vectors sit in a different region.  Additive
    features are linear, so the classes must differ in where the second
    sentence lies rather than only in token overlap.
    """
    from secondorder.paraphrase import SentencePair

    r = np.random.default_rng(seed)
    core = [f"c{i}" for i in range(40)]
    distractor = [f"d{i}" for i in range(40)]
    centre_c = r.normal(size=dim)
    centre_d = r.normal(size=dim)
    vectors = {w: centre_c + 1.5 * r.normal(size=dim) for w in core}
    vectors.update({w: centre_d + 1.5 * r.normal(size=dim) for w in distractor})
    emb = EmbeddingSet(Vocabulary(vectors), np.array(list(vectors.values())))
    pairs = []
    for _ in range(n_pairs):
        a = list(r.choice(core, size=10))
        label = bool(r.random() < 0.5)
        if label:
            b = list(a)
            for j in r.choice(10, size=int(r.integers(0, 3)), replace=False):
                b[j] = str(r.choice(core))
        else:
            b = a[:2] + list(r.choice(distractor, size=8))
        pairs.append(SentencePair(tuple(a), tuple(b), label))
    return emb, pairs
