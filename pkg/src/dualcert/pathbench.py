"""Regularisation paths with warm starts over a matrix of solver variants."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .celer import CelerParams, celer_solve
from .datafit import ModelKind, lambda_max, null_value
from .dataset import (Dataset, binarize, load_dense_targets, load_libsvm,
                      normalize_columns, prune_rare_features, synth_gaussian)
from .proxnewton import PNParams, pn_solve
from .solvers import SolveReport, SolverParams, solve

VARIANTS = ("cd", "cd+screen", "cd+screen+extr", "celer", "celer_no_extr",
            "prox_newton", "prox_newton_celer", "prox_newton_celer_no_extr")
LOGISTIC_ONLY = frozenset({"prox_newton", "prox_newton_celer", "prox_newton_celer_no_extr"})
CSV_FIELDS = ("variant", "model", "lambda_idx", "lambda", "epsilon", "seconds",
              "epochs", "gap", "support", "screened")
TRACE_FIELDS = ("variant", "epsilon", "lambda_idx", "epoch", "primal", "dual_rescaled",
                "dual_extrapolated", "dual_used", "sign_changed")


@dataclass
class SynthSpec:
    n: int
    p: int
    density: float = 1.0
    support: int = 10
    snr: float = 10.0

    @classmethod
    def parse(cls, text: str) -> "SynthSpec":
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"expected n,p,density,support,snr, got {text!r}")
        return cls(int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3]),
                   float(parts[4]))


@dataclass
class PathConfig:
    model: ModelKind = ModelKind.QUADRATIC
    data: str | None = None
    synth: SynthSpec | None = None
    targets: str | None = None
    n_tasks: int = 5
    grid: int = 10
    div: float = 100.0
    eps: tuple[float, ...] = (1e-4, 1e-6)
    variants: tuple[str, ...] = ("cd", "cd+screen", "cd+screen+extr", "celer")
    seed: int = 0
    warm_start: bool = True
    trace: bool = False
    max_epochs: int = 100_000

    def __post_init__(self):
        self.model = ModelKind(self.model)
        if (self.data is None) == (self.synth is None):
            raise ValueError("give exactly one of data and synth")
        if self.grid < 1:
            raise ValueError("grid must be >= 1")
        if not self.div > 1:
            raise ValueError("div must be > 1")
        if not self.eps or any(not e > 0 for e in self.eps):
            raise ValueError("epsilon values must be positive")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
            if v in LOGISTIC_ONLY and self.model is not ModelKind.LOGISTIC:
                raise ValueError(f"variant {v!r} needs --model logreg")


@dataclass
class PathRecord:
    variant: str
    model: str
    lambda_idx: int
    lam: float
    epsilon: float
    seconds: float
    epochs: int
    gap: float
    support: int
    screened: int
    primal: float = np.nan
    converged: bool = False

    def row(self) -> dict:
        d = {k: getattr(self, k) for k in CSV_FIELDS if k != "lambda"}
        d["lambda"] = self.lam
        return {k: d[k] for k in CSV_FIELDS}


@dataclass
class PathResult:
    records: list[PathRecord] = field(default_factory=list)
    traces: list[dict] = field(default_factory=list)
    lambdas: np.ndarray | None = None
    betas: dict = field(default_factory=dict)


def load_dataset(cfg: PathConfig) -> Dataset:
    """Load or generate the data, then normalise (and prune if sparse)."""
    multitask = cfg.model is ModelKind.MULTITASK
    if cfg.synth is not None:
        s = cfg.synth
        ds = synth_gaussian(s.n, s.p, s.density, s.support, s.snr, cfg.seed,
                            n_tasks=cfg.n_tasks if multitask else 1)
        if cfg.model is ModelKind.LOGISTIC:
            ds = binarize(ds)
    else:
        labels = "binary" if cfg.model is ModelKind.LOGISTIC else "any"
        ds = load_libsvm(cfg.data, labels=labels)
        if multitask:
            if cfg.targets is None:
                raise ValueError("the multitask model needs a targets file")
            ds = Dataset(ds.X, load_dense_targets(cfg.targets), ds.provenance)
    if multitask and not ds.is_multitask:
        raise ValueError("multitask targets must be an (n, q) matrix")
    if ds.X.is_sparse:
        ds, _ = prune_rare_features(ds, min_nnz=4)
    ds, _ = normalize_columns(ds)
    return ds


def lambda_grid(lmax: float, grid: int, div: float) -> np.ndarray:
    """``grid`` values from ``lmax`` down to ``lmax / div``, both inclusive."""
    if grid == 1:
        return np.array([lmax])
    return lmax * div ** (-np.arange(grid) / (grid - 1))


def _runner(variant: str, kind: ModelKind, tol: float,
            max_epochs: int) -> Callable[[Dataset, float, np.ndarray | None], SolveReport]:
    if variant.startswith("cd"):
        params = SolverParams(tol=tol, max_epochs=max_epochs,
                              screening="screen" in variant,
                              extrapolate=variant.endswith("extr"))
        return lambda ds, lam, b0: solve(kind, ds, lam, b0, params)
    if variant == "prox_newton":
        params = PNParams(tol=tol)
        return lambda ds, lam, b0: pn_solve(kind, ds, lam, b0, params)
    params = CelerParams(tol=tol, extrapolate=not variant.endswith("no_extr"),
                         inner="prox_newton" if variant.startswith("prox") else "cd",
                         max_inner_epochs=max_epochs)
    return lambda ds, lam, b0: celer_solve(kind, ds, lam, b0, params)


def _support_size(beta: np.ndarray) -> int:
    if beta.ndim == 2:
        return int(np.any(beta != 0, axis=1).sum())
    return int(np.count_nonzero(beta))


def run_path(cfg: PathConfig, ds: Dataset | None = None) -> PathResult:
    """Solve every (variant, epsilon) cell along the decreasing lambda grid."""
    if ds is None:
        ds = load_dataset(cfg)
    kind = cfg.model
    result = PathResult()
    t0 = time.perf_counter()
    lmax = lambda_max(kind, ds.X, ds.y)
    lmax_seconds = time.perf_counter() - t0
    result.lambdas = lambda_grid(lmax, cfg.grid, cfg.div)
    f0 = null_value(kind, ds.y)
    for variant in cfg.variants:
        for eps in cfg.eps:
            run = _runner(variant, kind, eps * f0, cfg.max_epochs)
            beta = None
            for k, lam in enumerate(result.lambdas):
                start = time.perf_counter()
                rep = run(ds, float(lam), beta if cfg.warm_start else None)
                seconds = time.perf_counter() - start + (lmax_seconds if k == 0 else 0.0)
                beta = rep.beta
                result.records.append(PathRecord(
                    variant, kind.value, k, float(lam), eps, seconds, rep.epochs_run,
                    rep.gap, _support_size(beta), rep.screened, rep.primal, rep.converged))
                result.betas[variant, eps, k] = beta.copy()
                if cfg.trace:
                    result.traces.extend(
                        dict(variant=variant, epsilon=eps, lambda_idx=k, **trace_row(g))
                        for g in rep.gap_history)
    return result


def trace_row(g) -> dict:
    return dict(epoch=g.epoch, primal=g.primal, dual_rescaled=g.dual_rescaled,
                dual_extrapolated=g.dual_extrapolated, dual_used=g.dual_used,
                sign_changed=bool(g.sign_changed))


def trace_gaps(kind: ModelKind, ds: Dataset, lam: float, tol: float,
               params: SolverParams | None = None) -> list[dict]:
    """Per-check primal and dual values of a single coordinate descent run."""
    params = params or SolverParams(tol=tol)
    params.tol = tol
    return [trace_row(g) for g in solve(kind, ds, lam, None, params).gap_history]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(rows: list[dict], fields, sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # 17 significant digits, like the CSV; non-finite values become null
        return float(f"{v:.17g}") if np.isfinite(v) else None
    return v


def emit_report(res: PathResult, fmt: str, sink: TextIO) -> None:
    """Write the per-solve records as CSV (fixed header) or a JSON list."""
    rows = [r.row() for r in res.records]
    if fmt == "csv":
        _write_csv(rows, CSV_FIELDS, sink)
    elif fmt == "json":
        json.dump([{k: _json_value(v) for k, v in r.items()} for r in rows], sink, indent=1)
        sink.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def emit_traces(res: PathResult, fmt: str, sink: TextIO) -> None:
    if fmt == "csv":
        _write_csv(res.traces, TRACE_FIELDS, sink)
    elif fmt == "json":
        json.dump([{k: _json_value(r[k]) for k in TRACE_FIELDS} for r in res.traces],
                  sink, indent=1)
        sink.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
