"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
``SECONDORDER_THREADS`` overrides the default worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import analysis, paraphrase
from .embed_io import concatenate, load_embeddings, save_embeddings
from .errors import DataError, NumericError, SecondOrderError
from .graph import induce_multi, load_graph, save_graph
from .knn import all_neighbors, load_neighbors, save_neighbors
from .pipeline import PipelineConfig, PipelineError, coerce, read_config, run_pipeline
from .sgns import SgnsConfig, read_corpus, train
from .walks import WalkConfig, generate_corpus, save_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _workers(args) -> int | None:
    if getattr(args, "deterministic", False):
        return 1
    return getattr(args, "threads", None)


def cmd_knn(args):
    e = load_embeddings(args.input)
    save_neighbors(all_neighbors(e, args.k, workers=_workers(args)), args.output)


def cmd_induce(args):
    nns = [load_neighbors(p) for p in args.nn]
    save_graph(induce_multi(nns), args.output)


def cmd_walk(args):
    g = load_graph(args.graph)
    cfg = WalkConfig(args.p, args.q, args.walk_length, args.walks_per_node, args.seed)
    save_corpus(generate_corpus(g, cfg, workers=args.workers), args.output)


def cmd_train(args):
    cfg = SgnsConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        lr_start=args.lr_start,
        lr_end=args.lr_end,
        min_count=args.min_count,
        sample=args.sample,
        seed=args.seed,
        workers=1 if args.deterministic else (args.workers or 1),
    )
    save_embeddings(train(read_corpus(args.corpus), cfg), args.output)


_PIPELINE_FLAGS = [
    ("k", int), ("p", float), ("q", float), ("walk_length", int), ("walks_per_node", int),
    ("dim", int), ("window", int), ("negatives", int), ("epochs", int), ("min_count", int),
    ("lr_start", float), ("lr_end", float), ("seed", int), ("density_k", int),
    ("density_m", int), ("workers", int),
]


def cmd_pipeline(args):
    settings = read_config(args.config) if args.config else {}
    for name, _ in _PIPELINE_FLAGS:
        value = getattr(args, name)
        if value is not None:
            settings[name] = value
    if args.samples:
        settings["samples"] = args.samples
    if args.output:
        settings["output"] = args.output
    if args.deterministic:
        settings["deterministic"] = True
    if not settings.get("samples"):
        raise UsageError("no embedding samples given (--samples or 'samples' in --config)")
    cfg = PipelineConfig(**{k: coerce(k, v) for k, v in settings.items()})
    result = run_pipeline(cfg)
    print(result.comparison.format())
    print(f"manifest: {result.manifest_path}")


def cmd_analyze(args):
    os.makedirs(args.output, exist_ok=True)
    sets = [load_embeddings(p) for p in args.emb]
    nns = [all_neighbors(e, args.k) for e in sets]
    if args.what == "density":
        reports = []
        for i, (e, nn) in enumerate(zip(sets, nns)):
            rep = analysis.density_report(e, nn, args.m)
            analysis.write_density(rep, args.output, f"emb{i}")
            reports.append(rep)
        if len(reports) >= 2:
            comp = analysis.compare_density(reports[0], reports[1])
            with open(os.path.join(args.output, "comparison.json"), "w", encoding="utf-8") as fh:
                json.dump(comp.as_dict(), fh, indent=2, sort_keys=True)
            print(comp.format())
        else:
            print(json.dumps(reports[0].summary(), indent=2))
    else:
        if len(sets) < 2:
            raise UsageError("overlap needs at least two --emb samples")
        rep = analysis.overlap_report(nns)
        analysis.write_overlap(rep, nns[0].vocab.words, os.path.join(args.output, "overlap.tsv"))
        agg = rep.aggregate()
        with open(os.path.join(args.output, "overlap_summary.json"), "w", encoding="utf-8") as fh:
            json.dump(agg, fh, indent=2, sort_keys=True)
        print(json.dumps(agg, indent=2))


def cmd_eval_paraphrase(args):
    emb = concatenate([load_embeddings(p) for p in args.emb])
    report = paraphrase.run_paraphrase(
        emb,
        paraphrase.ingest_msrpc(args.train),
        paraphrase.ingest_msrpc(args.test),
        mode=args.mode,
        cost=args.cost,
        threshold=args.threshold,
    )
    report["embeddings"] = list(args.emb)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(f"P={report['precision']:.4f} R={report['recall']:.4f} F1={report['f1']:.4f} acc={report['accuracy']:.4f}")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="secondorder", description="Second-order word embeddings from k-NN graphs.", formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("knn", help="exact cosine k nearest neighbours", formatter_class=fmt)
    p.add_argument("--input", required=True, help="embeddings in word2vec text format")
    p.add_argument("--k", type=int, default=10, help="neighbours per word")
    p.add_argument("--output", required=True, help="TSV of word, neighbour, similarity")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("induce", help="build the k-NN graph from one or more neighbour files", formatter_class=fmt)
    p.add_argument("--nn", required=True, nargs="+", action="extend", help="neighbour TSV; several = multi-sample weights")
    p.add_argument("--output", required=True, help="edge-list TSV")
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("walk", help="biased random-walk corpus", formatter_class=fmt)
    p.add_argument("--graph", required=True, help="edge-list TSV")
    p.add_argument("--p", type=float, default=1.0, help="return parameter")
    p.add_argument("--q", type=float, default=1.0, help="in-out parameter")
    p.add_argument("--walk-length", type=int, default=80, help="nodes per walk")
    p.add_argument("--walks-per-node", type=int, default=10, help="walks started at each node")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--output", required=True, help="one walk per line")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("train", help="skip-gram with negative sampling", formatter_class=fmt)
    p.add_argument("--corpus", required=True, help="one whitespace-tokenized sequence per line")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--min-count", type=int, default=4)
    p.add_argument("--lr-start", type=float, default=0.025)
    p.add_argument("--lr-end", type=float, default=0.0001)
    p.add_argument("--sample", type=float, default=0.0, help="frequent-word subsampling threshold (0 = off)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None, help="lock-free training threads")
    p.add_argument("--deterministic", action="store_true", help="single-threaded, reproducible")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pipeline", help="run all stages from a config file and/or flags")
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    # None marks "not given" so config-file values survive
    p.add_argument("--samples", nargs="+", action="extend", help="first-order embedding files")
    p.add_argument("--output", help="output directory")
    defaults = PipelineConfig()
    for name, kind in _PIPELINE_FLAGS:
        shown = "all cores" if name == "workers" else getattr(defaults, name)
        p.add_argument("--" + name.replace("_", "-"), type=kind, default=None, help=f"(default: {shown})")
    p.add_argument("--deterministic", action="store_true", help="single-threaded, bitwise reproducible")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("analyze", help="neighbourhood density or cross-sample overlap", formatter_class=fmt)
    p.add_argument("what", choices=("density", "overlap"))
    p.add_argument("--emb", required=True, nargs="+", action="extend", help="embedding files")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--m", type=int, default=10, help="extremal words per end")
    p.add_argument("--output", required=True, help="report directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval-paraphrase", help="logistic-regression paraphrase evaluation", formatter_class=fmt)
    p.add_argument("--emb", required=True, nargs="+", action="extend", help="embedding files, concatenated per word")
    p.add_argument("--train", required=True, help="MSRPC-format training TSV")
    p.add_argument("--test", required=True, help="MSRPC-format test TSV")
    p.add_argument("--mode", choices=paraphrase.MODES, default="concat")
    p.add_argument("--cost", type=float, default=0.001, help="loss weight C")
    p.add_argument("--threshold", type=float, default=0.5, help="decision threshold on P(equivalent)")
    p.add_argument("--report", required=True, help="JSON output")
    p.set_defaults(func=cmd_eval_paraphrase)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"secondorder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"secondorder: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, NumericError) else EXIT_DATA
    except NumericError as exc:
        print(f"secondorder: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, SecondOrderError) as exc:
        print(f"secondorder: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"secondorder: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
