"""Prox-Newton inner solver for l1-regularised logistic regression.

The Newton direction minimises a curvature-weighted Lasso by coordinate
descent without materialising the weighted design; the step size comes
from a backtracking test on the sign of the directional derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .datafit import (DualCertificate, ModelKind, grad_F, hessian_diag,
                      primal_value, rescale_dual)
from .dataset import Dataset, DesignMatrix
from .extrapolation import (ResidualBuffer, accel_dual_point, best_dual,
                            extrapolate, residual_vector)
from .solvers import GapRecord, SolveReport, bcd_epoch, cd_epoch


@dataclass
class PNParams:
    max_cd_iter: int = 20
    min_cd_iter: int = 2
    max_backtrack: int = 20
    K: int = 5
    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if self.max_backtrack < 1:
            raise ValueError("max_backtrack must be >= 1")
        if self.max_cd_iter < 1 or self.min_cd_iter < 1:
            raise ValueError("CD pass counts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class NewtonWorkspace:
    delta_beta: np.ndarray
    X_delta_beta: np.ndarray
    D: np.ndarray
    L: np.ndarray

    @classmethod
    def at(cls, X: DesignMatrix, Xbeta: np.ndarray, y: np.ndarray) -> "NewtonWorkspace":
        """Curvature and weighted column norms at the current iterate."""
        D = hessian_diag(ModelKind.LOGISTIC, Xbeta, y)
        data, indices, indptr = X.csc_arrays()
        L = _kernels.weighted_norms2(data, indices, indptr, D)
        return cls(np.zeros(X.p), np.zeros(X.n), D, L)

    def refresh(self, X: DesignMatrix) -> None:
        self.X_delta_beta = X.dot(self.delta_beta)


def newton_direction(X: DesignMatrix, grad: np.ndarray, beta: np.ndarray, lam: float,
                     ws: NewtonWorkspace, max_cd_iter: int, min_cd_iter: int = 2,
                     tol: float = 0.0) -> np.ndarray:
    """Approximate prox-Newton direction by cyclic CD on ``u = beta + delta``.

    ``grad`` is ``nabla F(X beta)`` (length n). Stops early once the weighted
    change ``sum_j (L_j * change_j)**2`` is at most ``tol`` after at least
    ``min_cd_iter`` passes.
    """
    ws.delta_beta[:] = 0.0
    ws.X_delta_beta[:] = 0.0
    data, indices, indptr = X.csc_arrays()
    _kernels.newton_direction_cd(data, indices, indptr, X.tdot(grad), ws.D, ws.L,
                                 np.asarray(beta, dtype=np.float64), float(lam),
                                 ws.delta_beta, ws.X_delta_beta,
                                 max_cd_iter, min_cd_iter, tol)
    ws.refresh(X)
    return ws.delta_beta


def _l1_directional(beta, delta, alpha, lam):
    z = beta + alpha * delta
    return lam * float(np.where(z < 0, -delta, np.where(z > 0, delta, -np.abs(delta))).sum())


def backtracking(delta_beta: np.ndarray, X_delta_beta: np.ndarray, beta: np.ndarray,
                 Xbeta: np.ndarray, y: np.ndarray, lam: float,
                 max_backtrack: int = 20) -> tuple[float, bool]:
    """Halve ``alpha`` from 1 until the directional derivative at the trial
    point is negative. Returns ``(alpha, accepted)``; when the test never
    passes, ``alpha`` is ``2 ** -max_backtrack`` and ``accepted`` is False.
    """
    alpha = 1.0
    for _ in range(max_backtrack):
        g = grad_F(ModelKind.LOGISTIC, Xbeta + alpha * X_delta_beta, y)
        delta = _l1_directional(beta, delta_beta, alpha, lam) + float(X_delta_beta @ g)
        if delta < 0:
            return alpha, True
        alpha /= 2.0
    return alpha, False


def pn_solve(kind: ModelKind, ds: Dataset, lam: float, beta0: np.ndarray | None = None,
             params: PNParams | None = None) -> SolveReport:
    """Prox-Newton iterations until the duality gap is at most ``params.tol``.

    ``epochs_run`` counts Newton steps.
    """
    if kind is not ModelKind.LOGISTIC:
        raise NotImplementedError("prox-Newton is implemented for logistic regression only")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    params = params or PNParams()
    X, y = ds.X, ds.y
    beta = np.zeros(X.p) if beta0 is None else np.array(beta0, dtype=np.float64)
    if beta.shape != (X.p,):
        raise ValueError(f"beta0 has shape {beta.shape}, expected {(X.p,)}")
    Xbeta = X.dot(beta)
    report = SolveReport(beta=beta, theta=None)
    theta = None
    t = 0
    while True:
        res = rescale_dual(kind, grad_F(kind, Xbeta, y), X, y, lam)
        prev = theta.relabel("previous") if theta is not None else None
        theta = best_dual([res, prev])
        primal = primal_value(kind, beta, Xbeta, y, lam)
        report.gap_history.append(GapRecord(t, primal, res.dual_value, np.nan,
                                            theta.dual_value, theta.provenance, False))
        if primal - theta.dual_value <= params.tol:
            report.converged = True
            break
        if t >= params.max_iter:
            break
        t += 1
        ws = NewtonWorkspace.at(X, Xbeta, y)
        max_cd = 1 if t == 1 else params.max_cd_iter
        delta = newton_direction(X, grad_F(kind, Xbeta, y), beta, lam, ws, max_cd,
                                 params.min_cd_iter, params.tol * lam ** 2)
        if not np.any(delta):
            break
        alpha, accepted = backtracking(delta, ws.X_delta_beta, beta, Xbeta, y, lam,
                                       params.max_backtrack)
        trial = beta + alpha * delta
        Xtrial = X.dot(trial)
        if not accepted and primal_value(kind, trial, Xtrial, y, lam) > primal:
            break
        beta, Xbeta = trial, Xtrial
    report.beta = beta
    report.theta = theta
    report.epochs_run = t
    return report


def support_cd_extrapolation(kind: ModelKind, ds: Dataset, lam: float, beta: np.ndarray,
                             K: int = 5) -> DualCertificate:
    """K coordinate descent passes restricted to the support of ``beta``,
    then an extrapolated dual point from the K + 1 buffered iterates.

    ``beta`` is updated in place by the passes.
    """
    X, y = ds.X, ds.y
    if kind is ModelKind.MULTITASK:
        support = np.flatnonzero(np.any(beta != 0, axis=1))
    else:
        support = np.flatnonzero(beta)
    Xbeta = X.dot(beta)
    if support.size == 0:
        return rescale_dual(kind, grad_F(kind, Xbeta, y), X, y, lam)
    buf = ResidualBuffer(K)
    buf.push(residual_vector(kind, Xbeta, y))
    for _ in range(K):
        if kind is ModelKind.MULTITASK:
            bcd_epoch(X, y, lam, beta, Xbeta, support)
        else:
            cd_epoch(kind, X, y, lam, beta, Xbeta, support)
        buf.push(residual_vector(kind, Xbeta, y))
    return accel_dual_point(kind, extrapolate(buf).r_acc, X, y, lam)
