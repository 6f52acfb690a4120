"""End-to-end second-order pipeline.

embeddings -> k-NN lists -> (multi-sample) graph -> biased walks -> SGNS,
followed by the density comparison between the first sample and the
result.  Every artifact lands in the output directory and is listed with
its SHA-256 in ``manifest.json``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

from . import __version__
from .analysis import compare_density, density_report, write_density
from .embed_io import EmbeddingSet, load_embeddings, save_embeddings
from .errors import DataError, SecondOrderError, VocabMismatch
from .graph import induce_multi, save_graph
from .knn import all_neighbors, default_workers, save_neighbors
from .sgns import SgnsConfig, train
from .walks import WalkConfig, generate_corpus, save_corpus

log = logging.getLogger(__name__)


class PipelineError(SecondOrderError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    samples: list = field(default_factory=list)
    output: str = "second_order_out"
    k: int = 10
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_node: int = 10
    dim: int = 100
    window: int = 10
    negatives: int = 5
    epochs: int = 1
    min_count: int = 1
    lr_start: float = 0.025
    lr_end: float = 0.0001
    seed: int = 1
    density_k: int = 10
    density_m: int = 10
    deterministic: bool = False
    workers: int = 0

    def __post_init__(self):
        if isinstance(self.samples, str):
            self.samples = [s for s in self.samples.split(",") if s]
        self.samples = [str(s) for s in self.samples]

    def validate(self):
        if self.k < 1:
            raise DataError("k must be >= 1")
        if not self.samples:
            raise DataError("at least one embedding sample is required")
        if self.density_k < 1 or self.density_m < 0:
            raise DataError("density_k must be >= 1 and density_m >= 0")
        self.walk_config()
        self.sgns_config()

    def effective_workers(self) -> int:
        if self.deterministic:
            return 1
        return self.workers or default_workers()

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.p, self.q, self.walk_length, self.walks_per_node, self.seed)

    def sgns_config(self) -> SgnsConfig:
        return SgnsConfig(
            dim=self.dim,
            window=self.window,
            negatives=self.negatives,
            epochs=self.epochs,
            lr_start=self.lr_start,
            lr_end=self.lr_end,
            min_count=self.min_count,
            seed=self.seed,
            workers=self.effective_workers(),
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def coerce(key: str, value):
    """Convert a textual config value to the field's type."""
    if key not in _FIELD_TYPES:
        raise DataError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    if not isinstance(value, str):
        return value
    if kind == "bool":
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise DataError(f"{key}: expected a boolean, got {value!r}")
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise DataError(f"{key}: cannot parse {value!r} as {kind}") from None
    if kind == "list":
        return [s.strip() for s in value.split(",") if s.strip()]
    return value.strip()


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Repeated
    ``samples`` keys accumulate."""
    out: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        value = coerce(key, value)
        if key == "samples" and "samples" in out:
            out["samples"] = out["samples"] + value
        else:
            out[key] = value
    return out


def write_config(cfg: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in cfg.as_dict().items():
            if isinstance(value, list):
                value = ",".join(value)
            fh.write(f"{key} = {value}\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class PipelineResult:
    embeddings: EmbeddingSet
    first_density: object
    second_density: object
    comparison: object
    manifest_path: str


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage; on failure raise :class:`PipelineError` naming the stage.

    Artifacts written before a failure are left in place.
    """
    try:
        cfg.validate()
    except SecondOrderError as exc:
        raise PipelineError("config", exc) from exc
    out = cfg.output
    os.makedirs(out, exist_ok=True)
    workers = cfg.effective_workers()
    artifacts: list[str] = []

    def stage(name, fn):
        log.info("stage %s", name)
        try:
            return fn()
        except SecondOrderError as exc:
            raise PipelineError(name, exc) from exc
        except OSError as exc:
            raise PipelineError(name, DataError(str(exc))) from exc

    def load_all():
        sets = [load_embeddings(p) for p in cfg.samples]
        for s in sets[1:]:
            if s.vocab != sets[0].vocab:
                raise VocabMismatch("embedding samples have different vocabularies")
        return sets

    samples = stage("load", load_all)

    def knn_all():
        nns = []
        for i, e in enumerate(samples):
            nn = all_neighbors(e, cfg.k, workers=workers)
            path = os.path.join(out, f"nn_sample{i}.tsv")
            save_neighbors(nn, path)
            artifacts.append(path)
            nns.append(nn)
        return nns

    nns = stage("knn", knn_all)

    def induce():
        g = induce_multi(nns)
        path = os.path.join(out, "graph.tsv")
        save_graph(g, path)
        artifacts.append(path)
        return g

    graph = stage("induce", induce)

    def walk():
        corpus = generate_corpus(graph, cfg.walk_config(), workers=1 if cfg.deterministic else workers)
        path = os.path.join(out, "walks.txt")
        save_corpus(corpus, path)
        artifacts.append(path)
        return corpus

    corpus = stage("walk", walk)

    def fit():
        emb = train(corpus, cfg.sgns_config())
        path = os.path.join(out, "second_order.txt")
        save_embeddings(emb, path)
        artifacts.append(path)
        return emb

    second = stage("train", fit)

    def analyze():
        first = samples[0]
        first_nn = nns[0] if cfg.density_k == cfg.k else all_neighbors(first, cfg.density_k, workers=workers)
        second_nn = all_neighbors(second, cfg.density_k, workers=workers)
        adir = os.path.join(out, "analysis")
        r1 = density_report(first, first_nn, cfg.density_m)
        r2 = density_report(second, second_nn, cfg.density_m)
        artifacts.extend(write_density(r1, adir, "first_order"))
        artifacts.extend(write_density(r2, adir, "second_order"))
        comp = compare_density(r1, r2)
        path = os.path.join(adir, "comparison.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(comp.as_dict(), fh, indent=2, sort_keys=True)
        artifacts.append(path)
        path = os.path.join(adir, "comparison.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(comp.format() + "\n")
        artifacts.append(path)
        return r1, r2, comp

    r1, r2, comp = stage("analyze", analyze)

    def manifest():
        config_path = os.path.join(out, "config.txt")
        write_config(cfg, config_path)
        artifacts.append(config_path)
        data = {
            "version": __version__,
            "seed": cfg.seed,
            "deterministic": cfg.deterministic,
            "config": cfg.as_dict(),
            "inputs": {p: sha256_file(p) for p in cfg.samples},
            "artifacts": {os.path.relpath(p, out): sha256_file(p) for p in artifacts},
        }
        path = os.path.join(out, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
        return path

    manifest_path = stage("manifest", manifest)
    return PipelineResult(second, r1, r2, comp, manifest_path)
