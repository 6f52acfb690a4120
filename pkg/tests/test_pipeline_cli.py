import json
import os

import numpy as np
import pytest

from secondorder.cli import main
from secondorder.embed_io import load_embeddings, save_embeddings
from secondorder.graph import load_graph
from secondorder.pipeline import PipelineConfig, PipelineError, read_config, run_pipeline, sha256_file

from conftest import make_set, toy_paraphrase_data

SMALL = ["--k", "5", "--dim", "8", "--walk-length", "12", "--walks-per-node", "3", "--epochs", "1",
         "--window", "4", "--density-k", "5", "--density-m", "3", "--seed", "7"]


def sample_files(tmp_path, count=1, n=40, d=6, seed=0):
    r = np.random.default_rng(seed)
    base = r.normal(size=(n, d))
    paths = []
    for i in range(count):
        path = tmp_path / f"sample{i}.txt"
        save_embeddings(make_set(base + 0.3 * r.normal(size=(n, d))), path)
        paths.append(str(path))
    return paths


def small_config(samples, out, **kw):
    opts = dict(k=5, dim=8, walk_length=12, walks_per_node=3, window=4, density_k=5, density_m=3, seed=7,
                deterministic=True)
    opts.update(kw)
    return PipelineConfig(samples=samples, output=str(out), **opts)


def test_pipeline_artifacts_and_manifest(tmp_path):
    samples = sample_files(tmp_path)
    result = run_pipeline(small_config(samples, tmp_path / "out"))
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    listed = manifest["artifacts"]
    on_disk = {
        os.path.relpath(os.path.join(root, f), out)
        for root, _, files in os.walk(out)
        for f in files
        if f != "manifest.json"
    }
    assert set(listed) == on_disk
    for rel, digest in listed.items():
        assert sha256_file(out / rel) == digest
    assert manifest["seed"] == 7 and manifest["config"]["k"] == 5
    assert len(result.embeddings) == 40
    assert result.first_density.min_pooled.size == 15


def test_three_samples_weights(tmp_path):
    samples = sample_files(tmp_path, count=3)
    run_pipeline(small_config(samples, tmp_path / "out"))
    g = load_graph(tmp_path / "out" / "graph.tsv")
    assert set(np.unique(g.weights).tolist()) <= {1 / 3, 2 / 3, 1.0}
    assert g.samples == 3


def test_rerun_from_manifest_config(tmp_path):
    samples = sample_files(tmp_path)
    assert main(["pipeline", "--samples", *samples, "--output", str(tmp_path / "a"), "--deterministic", *SMALL]) == 0
    first = json.loads((tmp_path / "a" / "manifest.json").read_text())["artifacts"]
    cfg_path = tmp_path / "a" / "config.txt"
    assert main(["pipeline", "--config", str(cfg_path), "--output", str(tmp_path / "b")]) == 0
    second = json.loads((tmp_path / "b" / "manifest.json").read_text())["artifacts"]
    first.pop("config.txt")
    second.pop("config.txt")
    assert first == second


def test_stage_isolation(tmp_path):
    samples = sample_files(tmp_path, count=2)
    out = tmp_path / "pipe"
    assert main(["pipeline", "--samples", *samples, "--output", str(out), "--deterministic", *SMALL]) == 0
    c = tmp_path / "chain"
    c.mkdir()
    for i, s in enumerate(samples):
        assert main(["knn", "--input", s, "--k", "5", "--output", str(c / f"nn{i}.tsv")]) == 0
    assert main(["induce", "--nn", str(c / "nn0.tsv"), str(c / "nn1.tsv"), "--output", str(c / "g.tsv")]) == 0
    assert main(["walk", "--graph", str(c / "g.tsv"), "--walk-length", "12", "--walks-per-node", "3",
                 "--seed", "7", "--output", str(c / "walks.txt")]) == 0
    assert main(["train", "--corpus", str(c / "walks.txt"), "--dim", "8", "--window", "4", "--epochs", "1",
                 "--min-count", "1", "--seed", "7", "--deterministic", "--output", str(c / "emb.txt")]) == 0
    assert (c / "nn0.tsv").read_bytes() == (out / "nn_sample0.tsv").read_bytes()
    assert (c / "g.tsv").read_bytes() == (out / "graph.tsv").read_bytes()
    assert (c / "walks.txt").read_bytes() == (out / "walks.txt").read_bytes()
    assert (c / "emb.txt").read_bytes() == (out / "second_order.txt").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    samples = sample_files(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# comment\nsamples = {samples[0]}\nk = 3\ndim = 6  # inline\nwalk_length = 5\n"
                   "walks_per_node = 2\ndensity_k = 3\ndensity_m = 2\n")
    parsed = read_config(cfg)
    assert parsed["k"] == 3 and parsed["samples"] == samples
    assert main(["pipeline", "--config", str(cfg), "--k", "4", "--output", str(tmp_path / "o"), "--deterministic"]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["k"] == 4
    assert manifest["config"]["dim"] == 6


def test_stage_error_names_stage(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\na 1 2\nb 1\n")
    with pytest.raises(PipelineError) as info:
        run_pipeline(small_config([str(bad)], tmp_path / "o"))
    assert info.value.stage == "load"


def test_partial_outputs_kept_on_failure(tmp_path):
    samples = sample_files(tmp_path)
    with pytest.raises(PipelineError) as info:
        run_pipeline(small_config(samples, tmp_path / "o", lr_start=1e200, lr_end=1e199))
    assert info.value.stage == "train"
    assert (tmp_path / "o" / "walks.txt").exists()


def test_exit_codes(tmp_path):
    samples = sample_files(tmp_path)
    assert main(["knn", "--k", "3"]) == 1
    assert main(["pipeline", "--output", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\na 1 2 3\n")
    assert main(["knn", "--input", str(bad), "--k", "3", "--output", str(tmp_path / "n.tsv")]) == 2
    assert main(["knn", "--input", str(tmp_path / "missing.txt"), "--k", "3", "--output", str(tmp_path / "n.tsv")]) == 2
    assert main(["pipeline", "--samples", samples[0], "--output", str(tmp_path / "o"), "--lr-start", "1e200",
                 "--lr-end", "1e199", "--deterministic", *SMALL]) == 3


def test_help_lists_defaults(capsys):
    assert main(["pipeline", "--help"]) == 0
    text = capsys.readouterr().out
    assert "--walks-per-node" in text and "(default: 10)" in text


def test_analyze_cli(tmp_path):
    samples = sample_files(tmp_path, count=3)
    out = tmp_path / "dens"
    assert main(["analyze", "density", "--emb", samples[0], samples[1], "--k", "5", "--m", "3", "--output", str(out)]) == 0
    comp = json.loads((out / "comparison.json").read_text())
    assert set(comp) >= {"first_order", "second_order", "deltas"}
    out = tmp_path / "ovl"
    assert main(["analyze", "overlap", "--emb", *samples, "--k", "5", "--output", str(out)]) == 0
    lines = (out / "overlap.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["word", "all", "some", "one", "mean_jaccard"]
    assert len(lines) == 41
    assert main(["analyze", "overlap", "--emb", samples[0], "--output", str(out)]) == 1


def write_msrpc(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("Quality\t#1 ID\t#2 ID\t#1 String\t#2 String\n")
        for i, p in enumerate(pairs):
            fh.write(f"{int(p.label)}\t{i}\t{i + 10000}\t{' '.join(p.sentence_a)}\t{' '.join(p.sentence_b)}\n")


def test_eval_paraphrase_cli(tmp_path):
    emb, pairs = toy_paraphrase_data()
    save_embeddings(emb, tmp_path / "e1.txt")
    save_embeddings(emb, tmp_path / "e2.txt")
    write_msrpc(tmp_path / "train.tsv", pairs[:140])
    write_msrpc(tmp_path / "test.tsv", pairs[140:])
    report = tmp_path / "r.json"
    assert main(["eval-paraphrase", "--emb", str(tmp_path / "e1.txt"), str(tmp_path / "e2.txt"),
                 "--train", str(tmp_path / "train.tsv"), "--test", str(tmp_path / "test.tsv"),
                 "--mode", "concat", "--cost", "0.001", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["test_pairs"] == 60 and data["mode"] == "concat"
    assert data["accuracy"] >= 0.9
    assert load_embeddings(tmp_path / "e1.txt").dim == 20
