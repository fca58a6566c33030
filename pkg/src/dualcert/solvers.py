"""Cyclic CD, proximal gradient and block CD with dual extrapolation.

Every ``freq`` epochs the solver builds a rescaled dual point and an
extrapolated one, keeps the best of these and the previous certificate,
evaluates the duality gap, and optionally applies Gap Safe screening.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .datafit import (DualCertificate, ModelKind, grad_F, primal_value,
                      rescale_dual)
from .dataset import Dataset, DesignMatrix, spectral_norm_sq
from .extrapolation import (ResidualBuffer, accel_dual_point, best_dual,
                            extrapolate, residual_vector)

ALGORITHMS = ("cd", "pg", "bcd")


@dataclass
class SolverParams:
    K: int = 5
    freq: int = 10
    max_epochs: int = 100_000
    tol: float = 1e-8
    screening: bool = False
    extrapolate: bool = True
    algorithm: str = "cd"

    def __post_init__(self):
        if self.freq < 1 or self.K < 1:
            raise ValueError("freq and K must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


class ActiveSet:
    """Features not yet discarded by screening."""

    def __init__(self, p: int):
        self.mask = np.ones(p, dtype=bool)
        self._idx = np.arange(p, dtype=np.int64)

    @property
    def remaining(self) -> int:
        return self._idx.size

    def indices(self) -> np.ndarray:
        return self._idx

    def discard(self, js) -> None:
        self.mask[js] = False
        self._idx = np.flatnonzero(self.mask).astype(np.int64)


@dataclass
class GapRecord:
    epoch: int
    primal: float
    dual_rescaled: float
    dual_extrapolated: float
    dual_used: float
    provenance: str
    sign_changed: bool

    @property
    def gap(self) -> float:
        return self.primal - self.dual_used


@dataclass
class SolveReport:
    beta: np.ndarray
    theta: DualCertificate
    gap_history: list = field(default_factory=list)
    screened_history: list = field(default_factory=list)
    epochs_run: int = 0
    converged: bool = False
    ws_history: list = field(default_factory=list)
    screened_features: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def gap(self) -> float:
        return self.gap_history[-1].gap if self.gap_history else np.inf

    @property
    def primal(self) -> float:
        return self.gap_history[-1].primal if self.gap_history else np.nan

    @property
    def screened(self) -> int:
        if not self.screened_history:
            return 0
        return self.screened_history[0][1] - self.screened_history[-1][1]


def _features(X: DesignMatrix, active) -> np.ndarray:
    # an ActiveSet, an explicit index array, or None for all features
    if active is None:
        return np.arange(X.p, dtype=np.int64)
    if isinstance(active, ActiveSet):
        return active.indices()
    return np.asarray(active, dtype=np.int64)


def cd_epoch(kind: ModelKind, X: DesignMatrix, y: np.ndarray, lam: float,
             beta: np.ndarray, Xbeta: np.ndarray, active=None):
    """One cyclic coordinate descent pass (in place, increasing index order)."""
    data, indices, indptr = X.csc_arrays()
    model = _kernels.LOGISTIC if kind is ModelKind.LOGISTIC else _kernels.QUADRATIC
    _kernels.cd_epoch(data, indices, indptr, y, Xbeta, beta, lam, X.column_norms ** 2,
                      kind.gamma, _features(X, active), model)
    return beta, Xbeta


def pg_epoch(kind: ModelKind, X: DesignMatrix, y: np.ndarray, lam: float,
             beta: np.ndarray, Xbeta: np.ndarray, L: float,
             active: ActiveSet | None = None):
    """One proximal gradient (ISTA) step with step size ``gamma / L``."""
    if not L > 0:
        raise ValueError("Lipschitz constant must be positive")
    step = kind.gamma / L
    grad = X.tdot(grad_F(kind, Xbeta, y))
    z = beta - step * grad
    new = np.sign(z) * np.maximum(np.abs(z) - lam * step, 0.0)
    if active is not None:
        new[~active.mask] = 0.0
    beta[:] = new
    Xbeta[:] = X.dot(beta)
    return beta, Xbeta


def bcd_epoch(X: DesignMatrix, Y: np.ndarray, lam: float, B: np.ndarray,
              XB: np.ndarray, active=None):
    """One cyclic block soft-thresholding pass over the rows of ``B``."""
    data, indices, indptr = X.csc_arrays()
    _kernels.bcd_epoch(data, indices, indptr, Y, XB, B, lam, X.column_norms ** 2,
                       _features(X, active))
    return B, XB


def gap_safe_screen(kind: ModelKind, cert: DualCertificate, gap: float, X: DesignMatrix,
                    lam: float, active: ActiveSet, beta: np.ndarray | None = None,
                    Xbeta: np.ndarray | None = None) -> ActiveSet:
    """Discard features certified inactive at the optimum.

    Screened coefficients are zeroed and ``Xbeta`` is corrected in place.
    """
    if gap < -1e-10:
        raise ValueError(f"negative duality gap {gap!r}")
    gap = max(gap, 0.0)
    radius = np.sqrt(2.0 * gap / (kind.gamma * lam ** 2))
    idx = active.indices()
    if idx.size == 0:
        return active
    corr = X.tdot(cert.theta)[idx]
    if kind is ModelKind.MULTITASK:
        corr = np.sqrt((corr ** 2).sum(axis=1))
    else:
        corr = np.abs(corr)
    norms = X.column_norms[idx]
    with np.errstate(divide="ignore"):
        score = np.where(norms > 0, (1.0 - corr) / norms, np.inf)
    drop = idx[score > radius]
    if drop.size:
        if beta is not None:
            nz = drop[np.any(np.reshape(beta[drop], (drop.size, -1)) != 0, axis=1)]
            if nz.size and Xbeta is not None:
                Xbeta -= X.columns(nz).dot(beta[nz])
            beta[drop] = 0.0
        active.discard(drop)
    return active


def _sign_pattern(kind: ModelKind, beta: np.ndarray) -> np.ndarray:
    if kind is ModelKind.MULTITASK:
        return np.any(beta != 0, axis=1)
    return np.sign(beta)


def dual_candidates(kind, X, y, lam, Xbeta, buffer: ResidualBuffer | None):
    """Rescaled and (if a buffer is given) extrapolated dual points."""
    res = rescale_dual(kind, grad_F(kind, Xbeta, y), X, y, lam)
    acc = None
    if buffer is not None:
        buffer.push(residual_vector(kind, Xbeta, y))
        acc = accel_dual_point(kind, extrapolate(buffer).r_acc, X, y, lam)
    return res, acc


def solve(kind: ModelKind, ds: Dataset, lam: float, beta0: np.ndarray | None = None,
          params: SolverParams | None = None) -> SolveReport:
    """Run CD / PG / BCD until the duality gap drops below ``params.tol``."""
    params = params or SolverParams()
    if not lam > 0:
        raise ValueError("lambda must be positive")
    X, y = ds.X, ds.y
    algorithm = "bcd" if kind is ModelKind.MULTITASK else params.algorithm
    if kind is not ModelKind.MULTITASK and algorithm == "bcd":
        raise ValueError("block CD is for the multitask model")
    shape = (X.p, y.shape[1]) if kind is ModelKind.MULTITASK else (X.p,)
    beta = np.zeros(shape) if beta0 is None else np.array(beta0, dtype=np.float64)
    if beta.shape != shape:
        raise ValueError(f"beta0 has shape {beta.shape}, expected {shape}")
    Xbeta = X.dot(beta)
    active = ActiveSet(X.p)
    buffer = ResidualBuffer(params.K) if params.extrapolate else None
    L = spectral_norm_sq(X) if algorithm == "pg" else None

    report = SolveReport(beta=beta, theta=None)
    report.screened_history.append((0, active.remaining))
    theta = None
    prev_sign = None
    epoch = 0
    while True:
        if epoch % params.freq == 0:
            Xbeta = X.dot(beta)
            res, acc = dual_candidates(kind, X, y, lam, Xbeta, buffer)
            prev = theta.relabel("previous") if theta is not None else None
            theta = best_dual([res, acc, prev])
            primal = primal_value(kind, beta, Xbeta, y, lam)
            sign = _sign_pattern(kind, beta)
            changed = prev_sign is not None and not np.array_equal(sign, prev_sign)
            prev_sign = sign
            report.gap_history.append(GapRecord(
                epoch, primal, res.dual_value,
                acc.dual_value if acc is not None else np.nan,
                theta.dual_value, theta.provenance, changed))
            gap = primal - theta.dual_value
            if gap <= params.tol:
                report.converged = True
                break
            if params.screening:
                gap_safe_screen(kind, theta, gap, X, lam, active, beta, Xbeta)
            report.screened_history.append((epoch, active.remaining))
        if epoch >= params.max_epochs:
            break
        if algorithm == "cd":
            cd_epoch(kind, X, y, lam, beta, Xbeta, active)
        elif algorithm == "pg":
            pg_epoch(kind, X, y, lam, beta, Xbeta, L, active)
        else:
            bcd_epoch(X, y, lam, beta, Xbeta, active)
        epoch += 1

    report.beta = beta
    report.theta = theta
    report.epochs_run = epoch
    report.screened_features = np.flatnonzero(~active.mask)
    return report
