"""Command-line entry points: homophily | simrank | train | eval | verify | bench.

Exit codes are stable: 0 success, 2 input error, 3 numeric failure, 4 guard
refusal. Every subcommand is deterministic given --seed, apart from wall-clock
fields in reports.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bench import format_tsv, run_bench
from .data import load_bundle
from .errors import GuardError, InputFormatError, NumericError, ParameterError
from .graph import load_edge_list, node_homophily
from .model import (
    HyperParams,
    evaluate,
    fit,
    load_checkpoint,
    save_checkpoint,
)
from .simrank import (
    dump_sparse_sim,
    load_sparse_sim,
    production_from_push,
    simrank_localpush,
    simrank_production,
    topk_from_push,
    topk_prune,
)
from .verify import run_all

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_GUARD = 4

_HP_FLAGS = [
    ("--delta", float),
    ("--alpha", float),
    ("--c", float),
    ("--k", int),
    ("--eps", float),
    ("--width", int),
    ("--mlp-h-depth", int),
    ("--lr", float),
    ("--dropout", float),
    ("--weight-decay", float),
    ("--max-epochs", int),
    ("--patience", float),
    ("--sim-mode", str),
    ("--skip-form", str),
]


def _add_shared_io(parser: argparse.ArgumentParser, need_bundle: bool) -> None:
    parser.add_argument("--edges", required=True, help="edge list file ('u v' per line)")
    if need_bundle:
        parser.add_argument("--features", required=True, help="feature matrix file")
        parser.add_argument("--labels", required=True, help="label file (one int per line)")
        parser.add_argument("--train-split", required=True)
        parser.add_argument("--val-split", required=True)
        parser.add_argument("--test-split", required=True)


def _add_hp_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    for flag, typ in _HP_FLAGS:
        parser.add_argument(flag, type=typ, default=None)


def _hyperparams(args: argparse.Namespace) -> HyperParams:
    overrides = {}
    for flag, _ in _HP_FLAGS:
        key = flag.lstrip("-").replace("-", "_")
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if args.config:
        return HyperParams.from_file(args.config, overrides)
    return HyperParams.from_dict(overrides)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_homophily(args: argparse.Namespace) -> int:
    with open(args.edges) as fh:
        g = load_edge_list(fh)
    from .data import load_labels

    with open(args.labels) as fh:
        labels = load_labels(fh)
    print(f"{node_homophily(g, labels):.4f}")
    return EXIT_OK


def cmd_simrank(args: argparse.Namespace) -> int:
    with open(args.edges) as fh:
        g = load_edge_list(fh)
    t0 = time.perf_counter()
    dense = None
    raw = None
    if args.mode == "exact":
        dense = simrank_production(g, args.c, args.eps, "exact")
        sim = topk_prune(dense, args.k)
    else:
        raw = simrank_localpush(g, args.c, args.eps)
        sim = topk_from_push(raw, args.k)
    seconds = time.perf_counter() - t0
    out_dir = _out_dir(args)
    out = out_dir / "similarity.txt"
    with open(out, "w") as fh:
        dump_sparse_sim(sim, fh)
    print(f"precompute_seconds\t{seconds:.6f}")
    print(f"wrote\t{out}")
    if args.labels:
        # intra/inter-class score distribution diagnostic
        from .data import load_labels
        from .simrank import class_score_histogram

        with open(args.labels) as fh:
            labels = load_labels(fh)
        if dense is None:
            dense = production_from_push(raw)
        hist = class_score_histogram(dense, labels)
        hist_path = out_dir / "score_histogram.tsv"
        with open(hist_path, "w") as fh:
            fh.write("log10_bin_lo\tlog10_bin_hi\tintra\tinter\n")
            for lo, hi, a, b in zip(
                hist.bin_edges[:-1], hist.bin_edges[1:], hist.intra_counts, hist.inter_counts
            ):
                fh.write(f"{lo:.6f}\t{hi:.6f}\t{a}\t{b}\n")
        print(f"wrote\t{hist_path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    bundle = load_bundle(
        args.edges, args.features, args.labels, args.train_split, args.val_split, args.test_split
    )
    hp = _hyperparams(args)
    sim = None
    if args.sim:
        with open(args.sim) as fh:
            sim = load_sparse_sim(fh)
        # record the dump's provenance so a checkpoint-driven recompute
        # (eval without --sim) reproduces the similarity actually trained on
        hp = dataclasses.replace(
            hp, c=sim.c, k=sim.k, sim_mode="exact" if sim.method == "fixedpoint" else "approx"
        )
    params, report = fit(bundle, hp, sim=sim)
    out = _out_dir(args)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")
    save_checkpoint(out / "checkpoint.npz", params, hp)
    if args.export_embeddings:
        if sim is None:
            from .model import precompute_similarity

            sim = precompute_similarity(bundle.graph, hp)
        from .model import aggregate, embed

        z = aggregate(sim, embed(bundle, params, hp), hp.alpha, hp.skip_form)
        np.savetxt(out / "embeddings.txt", z)
    print(f"test_accuracy\t{report.test_accuracy:.6f}")
    print(f"best_epoch\t{report.best_epoch}")
    print(f"wrote\t{out / 'report.json'}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    bundle = load_bundle(
        args.edges, args.features, args.labels, args.train_split, args.val_split, args.test_split
    )
    params, hp = load_checkpoint(args.checkpoint)
    if args.sim:
        with open(args.sim) as fh:
            sim = load_sparse_sim(fh)
    else:
        from .model import precompute_similarity

        sim = precompute_similarity(bundle.graph, hp)
    split = {"train": bundle.train_idx, "val": bundle.val_idx, "test": bundle.test_idx}[args.split]
    acc = evaluate(bundle, sim, params, hp, split)
    result = {"split": args.split, "accuracy": acc}
    if args.out:
        out = _out_dir(args)
        with open(out / "eval.json", "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    print(f"accuracy\t{acc:.6f}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_all(seed=args.seed or 0, corrupt_push=args.corrupt_push)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  max_error={r.max_error:.3e}  bound={r.bound:.3e}  ({r.detail})")
        failed = failed or not r.passed
    if failed:
        print("verification FAILED", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    ladder = [int(tok) for tok in args.ladder.split(",") if tok]
    result = run_bench(
        ladder, degree=args.degree, eps=args.eps, k=args.k, c=args.c, seed=args.seed or 0
    )
    sys.stdout.write(format_tsv(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simga",
        description="SimRank global-aggregation toolkit: similarity precomputation, "
        "training, verification, and scaling benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("homophily", help="print the node homophily of a labeled graph")
    _add_shared_io(p, need_bundle=False)
    p.add_argument("--labels", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("simrank", help="precompute top-k sparse similarity and dump it")
    _add_shared_io(p, need_bundle=False)
    p.add_argument("--labels", help="optional; also write the intra/inter-class score histogram")
    p.add_argument("--c", type=float, default=0.6)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--k", type=int, default=1024)
    p.add_argument("--mode", choices=["exact", "approx"], default="exact")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simrank)

    p = sub.add_parser("train", help="train the classifier and write report + checkpoint")
    _add_shared_io(p, need_bundle=True)
    _add_hp_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sim", help="precomputed similarity dump (else computed inline)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--export-embeddings", action="store_true", help="also write embeddings.txt")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    _add_shared_io(p, need_bundle=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sim", help="precomputed similarity dump")
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="optional output directory for eval.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run the built-in equivalence suites")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--corrupt-push", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="scaling ladder benchmark (TSV on stdout)")
    p.add_argument("--ladder", default="1000,2000,4000,8000", help="comma-separated node counts")
    p.add_argument("--degree", type=float, default=8.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--c", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (NumericError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputFormatError, ParameterError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
