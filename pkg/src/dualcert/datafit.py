"""Data-fitting terms of the supported sparse GLMs and their duals.

All three models share the dual feasible set ``{theta : ||X^T theta|| <= 1}``
(the multitask Lasso uses row-wise l2 norms of ``X^T Theta``), so a feasible
point is always obtained by rescaling a negative gradient.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .dataset import DesignMatrix

#: tolerance accepted on ||X^T theta|| - 1 when checking feasibility
FEAS_TOL = 1e-12


class ModelKind(str, enum.Enum):
    QUADRATIC = "lasso"
    LOGISTIC = "logreg"
    MULTITASK = "mtl"

    @property
    def gamma(self) -> float:
        """Inverse Lipschitz constant of each f_i'."""
        return 4.0 if self is ModelKind.LOGISTIC else 1.0


PROVENANCE_RANK = {"previous": 3, "inner": 2, "extrapolated": 1, "rescaled": 0}


@dataclass(frozen=True)
class DualCertificate:
    theta: np.ndarray
    dual_value: float
    provenance: str

    def relabel(self, provenance: str) -> "DualCertificate":
        return DualCertificate(self.theta, self.dual_value, provenance)


def datafit_value(kind: ModelKind, Xbeta: np.ndarray, y: np.ndarray) -> float:
    """``F(X beta) = sum_i f_i((X beta)_i)``."""
    if kind is ModelKind.LOGISTIC:
        return float(np.logaddexp(0.0, -y * Xbeta).sum())
    R = y - Xbeta
    return 0.5 * float(np.vdot(R, R))


def penalty_value(kind: ModelKind, beta: np.ndarray) -> float:
    if kind is ModelKind.MULTITASK:
        return float(np.sqrt((beta ** 2).sum(axis=1)).sum())
    return float(np.abs(beta).sum())


def primal_value(kind: ModelKind, beta: np.ndarray, Xbeta: np.ndarray,
                 y: np.ndarray, lam: float) -> float:
    return datafit_value(kind, Xbeta, y) + lam * penalty_value(kind, beta)


def grad_F(kind: ModelKind, Xbeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kind is ModelKind.LOGISTIC:
        return -y * expit(-y * Xbeta)
    return Xbeta - y


def _logistic_dual(theta, y, lam):
    u = lam * theta * y
    if np.any(u < -FEAS_TOL) or np.any(u > 1.0 + FEAS_TOL):
        return -np.inf
    u = np.clip(u, 0.0, 1.0)
    return -float((xlogy(u, u) + xlogy(1.0 - u, 1.0 - u)).sum())


def dual_objective(kind: ModelKind, theta: np.ndarray, y: np.ndarray, lam: float) -> float:
    """``D(theta) = -sum_i f_i^*(-lam theta_i)``; ``-inf`` off the conjugate domain."""
    if kind is ModelKind.LOGISTIC:
        return _logistic_dual(theta, y, lam)
    # 1/2 ||y||^2 - lam^2/2 ||y/lam - theta||^2, expanded to avoid cancellation
    return lam * float(np.vdot(theta, y)) - 0.5 * lam ** 2 * float(np.vdot(theta, theta))


def dual_norm(kind: ModelKind, X: DesignMatrix, theta: np.ndarray) -> float:
    """``||X^T theta||_inf``, or ``max_j ||x_j^T Theta||`` for the multitask case."""
    corr = X.tdot(theta)
    if corr.size == 0:
        return 0.0
    if kind is ModelKind.MULTITASK:
        return float(np.sqrt((corr ** 2).sum(axis=1)).max())
    return float(np.abs(corr).max())


def make_certificate(kind: ModelKind, theta: np.ndarray, y: np.ndarray, lam: float,
                     provenance: str) -> DualCertificate:
    return DualCertificate(theta, dual_objective(kind, theta, y, lam), provenance)


def rescale_dual(kind: ModelKind, grad: np.ndarray, X: DesignMatrix, y: np.ndarray,
                 lam: float, provenance: str = "rescaled") -> DualCertificate:
    """Feasible point ``-grad / max(lam, ||X^T grad||)``."""
    scale = max(lam, dual_norm(kind, X, grad))
    return make_certificate(kind, -grad / scale, y, lam, provenance)


def duality_gap(kind: ModelKind, beta: np.ndarray, Xbeta: np.ndarray,
                cert: DualCertificate, X: DesignMatrix, y: np.ndarray, lam: float) -> float:
    """``P(beta) - D(theta)``; raises if ``cert`` is not dual feasible."""
    norm = dual_norm(kind, X, cert.theta)
    if norm > 1.0 + FEAS_TOL:
        raise ValueError(f"infeasible dual point: dual norm {norm!r} > 1")
    return primal_value(kind, beta, Xbeta, y, lam) - cert.dual_value


def lambda_max(kind: ModelKind, X: DesignMatrix, y: np.ndarray) -> float:
    """Smallest regularisation for which ``beta = 0`` is optimal."""
    return dual_norm(kind, X, grad_F(kind, np.zeros_like(y), y))


def hessian_diag(kind: ModelKind, Xbeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Entries ``f_i''((X beta)_i)``."""
    if kind is ModelKind.MULTITASK:
        raise NotImplementedError("curvature is only defined for single-task models")
    if kind is ModelKind.QUADRATIC:
        return np.ones_like(Xbeta)
    # y_i^2 = 1, so f_i'' = sigma(t) sigma(-t); written with exp(-|t|) to stay positive
    e = np.exp(-np.abs(Xbeta))
    return e / (1.0 + e) ** 2


def null_value(kind: ModelKind, y: np.ndarray) -> float:
    """``F(0)``, the scale used for relative stopping tolerances."""
    return datafit_value(kind, np.zeros_like(y), y)
