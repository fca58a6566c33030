"""``pathbench`` command line entry point."""

from __future__ import annotations

import argparse
import sys
from contextlib import ExitStack
from pathlib import Path

from .datafit import ModelKind
from .pathbench import (LOGISTIC_ONLY, VARIANTS, PathConfig, SynthSpec,
                        emit_report, emit_traces, load_dataset, run_path)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _synth(text: str) -> SynthSpec:
    try:
        return SynthSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pathbench",
        description="Regularisation-path benchmark for l1 sparse GLM solvers.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="LIBSVM file")
    src.add_argument("--synth", type=_synth, metavar="n,p,density,support,snr",
                     help="Gaussian synthetic design")
    ap.add_argument("--targets", help="dense (n, q) target matrix for --model mtl")
    ap.add_argument("--tasks", type=int, default=5, help="task count for synthetic mtl data")
    ap.add_argument("--model", choices=[k.value for k in ModelKind], default="lasso")
    ap.add_argument("--grid", type=int, default=10, help="number of lambda values")
    ap.add_argument("--div", type=float, default=100.0, help="lambda_max / lambda_min")
    ap.add_argument("--eps", type=_float_list, default=(1e-2, 1e-4, 1e-6),
                    help="relative tolerances, scaled by F(0)")
    ap.add_argument("--variants", type=_str_list, default=None,
                    help=f"comma separated subset of {','.join(VARIANTS)}")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-", help="report path ('-' for stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--trace", action="store_true", help="also write gap histories")
    ap.add_argument("--trace-out", help="gap history path (default: next to --out)")
    return ap


def _default_variants(model: str) -> tuple[str, ...]:
    if model == ModelKind.LOGISTIC.value:
        return VARIANTS
    return tuple(v for v in VARIANTS if v not in LOGISTIC_ONLY)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = PathConfig(model=args.model, data=args.data, synth=args.synth,
                         targets=args.targets, n_tasks=args.tasks, grid=args.grid,
                         div=args.div, eps=args.eps,
                         variants=args.variants or _default_variants(args.model),
                         seed=args.seed, trace=args.trace)
        ds = load_dataset(cfg)
    except (ValueError, OSError) as exc:
        ap.exit(2, f"pathbench: error: {exc}\n")
    res = run_path(cfg, ds)
    with ExitStack() as stack:
        out = sys.stdout if args.out == "-" else stack.enter_context(open(args.out, "w"))
        emit_report(res, args.format, out)
        if args.trace:
            if args.trace_out:
                trace_path = args.trace_out
            elif args.out != "-":
                p = Path(args.out)
                trace_path = str(p.with_name(f"{p.stem}.trace.{args.format}"))
            else:
                trace_path = None
            sink = sys.stderr if trace_path is None else stack.enter_context(open(trace_path, "w"))
            emit_traces(res, args.format, sink)
    return 0


if __name__ == "__main__":
    sys.exit(main())
