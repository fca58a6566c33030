"""Working-set solver driven by dual scores and extrapolated certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datafit import (DualCertificate, ModelKind, dual_norm, grad_F,
                      make_certificate, primal_value, rescale_dual)
from .dataset import Dataset, DesignMatrix
from .extrapolation import best_dual
from .proxnewton import PNParams, pn_solve, support_cd_extrapolation
from .solvers import GapRecord, SolveReport, SolverParams, solve

INNER_SOLVERS = ("cd", "prox_newton")


@dataclass
class CelerParams:
    p1: int = 100
    rho: float = 0.3
    max_ws_iters: int = 50
    tol: float = 1e-8
    inner: str = "cd"
    K: int = 5
    freq: int = 10
    extrapolate: bool = True
    max_inner_epochs: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.p1 < 1:
            raise ValueError("p1 must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.inner not in INNER_SOLVERS:
            raise ValueError(f"unknown inner solver {self.inner!r}")


@dataclass(frozen=True)
class WorkingSet:
    indices: np.ndarray      # sorted increasing, so inner CD keeps a fixed order
    epsilon_inner: float

    @property
    def size(self) -> int:
        return self.indices.size


def _support(kind: ModelKind, beta: np.ndarray) -> np.ndarray:
    if kind is ModelKind.MULTITASK:
        return np.any(beta != 0, axis=1)
    return beta != 0


def feature_scores(kind: ModelKind, X: DesignMatrix, cert: DualCertificate,
                   beta: np.ndarray) -> np.ndarray:
    """``(1 - |x_j^T theta|) / ||x_j||``; -1 on the support, +inf for empty columns."""
    corr = X.tdot(cert.theta)
    if kind is ModelKind.MULTITASK:
        corr = np.sqrt((corr ** 2).sum(axis=1))
    else:
        corr = np.abs(corr)
    norms = X.column_norms
    d = np.full(X.p, np.inf)
    nz = norms > 0
    d[nz] = (1.0 - corr[nz]) / norms[nz]
    d[_support(kind, beta)] = -1.0
    return d


def _smallest(d: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` smallest entries; ties at the cutoff go to lower indices."""
    if k >= d.size:
        return np.arange(d.size)
    cutoff = np.partition(d, k - 1)[k - 1]
    below = np.flatnonzero(d < cutoff)
    at = np.flatnonzero(d == cutoff)[: k - below.size]
    return np.sort(np.concatenate([below, at]))


def working_set_size(t: int, n_support: int, p: int, p1: int, warm: bool) -> int:
    if t == 1:
        size = n_support if warm else p1
    else:
        size = 2 * n_support
    return max(1, min(size, p))


def create_working_set(kind: ModelKind, d: np.ndarray, beta_prev: np.ndarray,
                       global_gap: float, t: int, params: CelerParams,
                       warm: bool = False) -> WorkingSet:
    """Working set of the ``p^(t)`` lowest scores and the subproblem tolerance."""
    if not global_gap > 0:
        raise ValueError("global gap must be positive")
    n_support = int(_support(kind, beta_prev).sum())
    k = working_set_size(t, n_support, d.size, params.p1, warm)
    k = min(k, int(np.isfinite(d).sum())) or 1
    return WorkingSet(_smallest(d, k), params.rho * global_gap)


def _inner_certificate(kind, X, y, lam, theta) -> DualCertificate:
    # the subproblem only saw X_W; rescaling against the full X restores feasibility
    theta = theta / max(1.0, dual_norm(kind, X, theta))
    return make_certificate(kind, theta, y, lam, "inner")


def celer_solve(kind: ModelKind, ds: Dataset, lam: float, beta0: np.ndarray | None = None,
                params: CelerParams | None = None) -> SolveReport:
    """Outer working-set loop.

    ``epochs_run`` sums the inner solver's epochs (Newton steps for the
    prox-Newton inner solver); ``ws_history`` holds the working-set sizes.
    """
    params = params or CelerParams()
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if params.inner == "prox_newton" and kind is not ModelKind.LOGISTIC:
        raise ValueError("the prox-Newton inner solver needs the logistic model")
    X, y = ds.X, ds.y
    shape = (X.p, y.shape[1]) if kind is ModelKind.MULTITASK else (X.p,)
    beta = np.zeros(shape) if beta0 is None else np.array(beta0, dtype=np.float64)
    if beta.shape != shape:
        raise ValueError(f"beta0 has shape {beta.shape}, expected {shape}")
    warm = bool(np.any(beta))

    report = SolveReport(beta=beta, theta=None)
    theta = None
    theta_inner = None
    epochs = 0
    for t in range(1, params.max_ws_iters + 1):
        if params.inner == "prox_newton" and params.extrapolate:
            acc = support_cd_extrapolation(kind, ds, lam, beta, params.K)
            theta_inner = best_dual([acc, theta_inner])
        Xbeta = X.dot(beta)
        res = rescale_dual(kind, grad_F(kind, Xbeta, y), X, y, lam)
        prev = theta.relabel("previous") if theta is not None else None
        theta = best_dual([prev, theta_inner, res])
        primal = primal_value(kind, beta, Xbeta, y, lam)
        gap = primal - theta.dual_value
        report.gap_history.append(GapRecord(
            epochs, primal, res.dual_value,
            theta_inner.dual_value if theta_inner is not None else np.nan,
            theta.dual_value, theta.provenance, False))
        if gap <= params.tol:
            report.converged = True
            break

        # scores come from the best point built at the current iterate; a stale
        # "previous" certificate can pin the working set and stall the loop
        current = best_dual([theta_inner, res])
        ws = create_working_set(kind, feature_scores(kind, X, current, beta), beta,
                                gap, t, params, warm)
        report.ws_history.append(ws.size)
        sub = Dataset(X.columns(ws.indices), y)
        if params.inner == "cd":
            inner = solve(kind, sub, lam, beta[ws.indices], SolverParams(
                K=params.K, freq=params.freq, max_epochs=params.max_inner_epochs,
                tol=ws.epsilon_inner, extrapolate=params.extrapolate))
        else:
            inner = pn_solve(kind, sub, lam, beta[ws.indices],
                             PNParams(K=params.K, tol=ws.epsilon_inner))
        epochs += inner.epochs_run
        theta_inner = _inner_certificate(kind, X, y, lam, inner.theta.theta)
        beta = np.zeros(shape)
        beta[ws.indices] = inner.beta

    report.beta = beta
    report.theta = theta
    report.epochs_run = epochs
    return report
