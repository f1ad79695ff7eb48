"""Command-line front end: dataset ingestion, synthetic generation, and the
experiment sweeps (reconstruction error, wall-clock, regression accuracy).

Exit codes: 0 success, 2 usage or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .datasets import from_matrix, load_dataset, save_dataset
from .estimators import METHODS, compute_pseudoinverse, factorize
from .pinv import FastpiConfig, fastpi, save_pseudoinverse
from .regression import SplitSpec, evaluate, fit, split
from .reorder import reorder, save_reorder_result, to_bipartite
from .svd import reconstruction_error, save_factors
from .synth import SynthSpec, synth_generate
from .validation import CapacityError, ParseError, StructuralViolationError

USAGE_ERROR = 2
NUMERICAL_ERROR = 3


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a ratio in (0, 1), got {text}")
    return value


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a ratio in (0, 1], got {text}")
    return value


def _alpha_list(text: str) -> list:
    return [_alpha(tok) for tok in text.split(",") if tok]


def _method_list(text: str) -> list:
    methods = [tok for tok in text.split(",") if tok]
    for name in methods:
        if name not in METHODS:
            raise argparse.ArgumentTypeError(
                f"unknown method {name!r}, expected a subset of {','.join(METHODS)}"
            )
    if not methods:
        raise argparse.ArgumentTypeError("method list must not be empty")
    return methods


def _int_list(text: str) -> list:
    return [int(tok) for tok in text.split(",") if tok]


def _write_lines(path, lines):
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastpi",
        description="Low-rank sparse pseudoinverse toolkit and experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a skewed sparse matrix dataset file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=_ratio, required=True)
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reorder", help="hub-removal reordering of the feature matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=_ratio, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("svd", help="low-rank factorization by one method")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=_ratio, default=0.01)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pinv", help="factored pseudoinverse via the reordering pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--k", type=_ratio, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("regress", help="multi-label regression accuracy sweep cell")
    p.add_argument("--dataset", required=True)
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--k", type=_ratio, default=0.01)
    p.add_argument("--split", type=_ratio, default=0.9)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pk", type=_int_list, default=[1, 3, 5])
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench-error", help="reconstruction error over (method, alpha) cells")
    p.add_argument("--input", required=True)
    p.add_argument("--alphas", type=_alpha_list, required=True)
    p.add_argument("--methods", type=_method_list, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=_ratio, default=0.01)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench-time", help="wall-clock over (method, alpha) cells")
    p.add_argument("--input", required=True)
    p.add_argument("--alphas", type=_alpha_list, required=True)
    p.add_argument("--methods", type=_method_list, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=_ratio, default=0.01)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--out", required=True)

    return parser


def _load_features(path):
    return load_dataset(path).features


def cmd_synth(args) -> int:
    spec = SynthSpec(args.m, args.n, args.density, args.exponent, args.seed)
    A = synth_generate(spec)
    save_dataset(from_matrix(A), args.out)
    return 0


def cmd_reorder(args) -> int:
    A = _load_features(args.input)
    result = reorder(to_bipartite(A), args.k)
    save_reorder_result(result, args.out)
    return 0


def cmd_svd(args) -> int:
    A = _load_features(args.input)
    config = FastpiConfig(alpha=args.alpha, k=args.k, seed=args.seed)
    factors, _, _ = factorize(A, args.method, config)
    save_factors(factors, args.out)
    return 0


def cmd_pinv(args) -> int:
    A = _load_features(args.input)
    config = FastpiConfig(alpha=args.alpha, k=args.k, seed=args.seed)
    result = fastpi(A, config)
    save_pseudoinverse(result.pseudoinverse, args.out)
    return 0


def cmd_regress(args) -> int:
    dataset = load_dataset(args.dataset)
    train, test = split(dataset, SplitSpec(train_fraction=args.split, seed=args.seed))
    config = FastpiConfig(alpha=args.alpha, k=args.k, seed=args.seed)
    start = time.perf_counter()
    pv, _, _ = compute_pseudoinverse(train.features, args.method, config)
    model = fit(train, pv, method=args.method, alpha=args.alpha)
    train_seconds = time.perf_counter() - start
    precisions = evaluate(model, test, args.pk)
    lines = ["method,alpha,k,precision,train_seconds,seed"]
    for k in args.pk:
        lines.append(
            f"{args.method},{_fmt(args.alpha)},{k},{_fmt(precisions[k])},"
            f"{train_seconds:.6f},{args.seed}"
        )
    _write_lines(args.out, lines)
    return 0


def cmd_bench_error(args) -> int:
    A = _load_features(args.input)
    lines = ["method,alpha,frobenius_error"]
    for method in args.methods:
        for alpha in args.alphas:
            config = FastpiConfig(alpha=alpha, k=args.k, seed=args.seed)
            factors, _, _ = factorize(A, method, config)
            err = reconstruction_error(A, factors)
            lines.append(f"{method},{_fmt(alpha)},{_fmt(err)}")
    _write_lines(args.out, lines)
    return 0


def cmd_bench_time(args) -> int:
    if args.runs < 1:
        raise ValueError("--runs must be at least 1")
    A = _load_features(args.input)
    summary = ["method,alpha,total_seconds"]
    stages = ["method,alpha,run,stage,seconds,rank"]
    for method in args.methods:
        for alpha in args.alphas:
            config = FastpiConfig(alpha=alpha, k=args.k, seed=args.seed)
            compute_pseudoinverse(A, method, config)  # warm-up, discarded
            for run in range(args.runs):
                start = time.perf_counter()
                _, _, timings = compute_pseudoinverse(A, method, config)
                total = time.perf_counter() - start
                for entry in timings:
                    stages.append(
                        f"{method},{_fmt(alpha)},{run},{entry.stage},"
                        f"{entry.seconds:.6f},{entry.rank}"
                    )
                summary.append(f"{method},{_fmt(alpha)},{total:.6f}")
    _write_lines(args.out, summary)
    out = Path(args.out)
    _write_lines(out.with_name(out.stem + ".stages" + (out.suffix or ".csv")), stages)
    return 0


_HANDLERS = {
    "synth": cmd_synth,
    "reorder": cmd_reorder,
    "svd": cmd_svd,
    "pinv": cmd_pinv,
    "regress": cmd_regress,
    "bench-error": cmd_bench_error,
    "bench-time": cmd_bench_time,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (OSError, ParseError) as exc:
        print(f"fastpi: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, CapacityError, StructuralViolationError, np.linalg.LinAlgError) as exc:
        print(f"fastpi: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
