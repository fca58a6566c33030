"""Extrapolation of residual sequences into better dual points."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .datafit import (PROVENANCE_RANK, DualCertificate, ModelKind, grad_F,
                      rescale_dual)
from .dataset import DesignMatrix

#: relative pivot threshold declaring U^T U singular
PIVOT_RTOL = 1e-12
#: singular value cutoff for the rank-deficient constrained least squares
LSTSQ_RCOND = 1e-10


class ResidualBuffer:
    """Ring buffer holding the ``K + 1`` most recent residual vectors."""

    def __init__(self, K: int = 5):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = K
        self._buf: deque[np.ndarray] = deque(maxlen=K + 1)
        self.count = 0

    def __len__(self) -> int:
        return len(self._buf)

    def clear(self) -> None:
        self._buf.clear()
        self.count = 0

    def push(self, r: np.ndarray) -> "ResidualBuffer":
        r = np.array(r, dtype=np.float64).ravel()
        if self._buf and r.shape != self._buf[0].shape:
            raise ValueError(f"expected a vector of size {self._buf[0].size}, got {r.size}")
        self._buf.append(r)
        self.count += 1
        return self

    def latest(self) -> np.ndarray:
        return self._buf[-1]

    def stacked(self) -> np.ndarray:
        """Stored vectors as rows, oldest first."""
        return np.vstack(self._buf)


@dataclass(frozen=True)
class ExtrapolationResult:
    r_acc: np.ndarray
    coefficients: np.ndarray | None
    # "ok": closed form; "reduced": U^T U singular, constrained least squares
    # on its null space; "fallback_last": latest vector returned as is
    flag: str


def _cholesky_solve(G: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    K = G.shape[0]
    thresh = PIVOT_RTOL * np.trace(G) / K
    L = np.zeros_like(G)
    for j in range(K):
        pivot = G[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > thresh:
            return None
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (G[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    z = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, z, lower=False)


def extrapolate(buf: ResidualBuffer) -> ExtrapolationResult:
    """Affine combination of the K latest residuals approximating the limit.

    The weights minimise ``||sum_k c_k (r_k - r_{k-1})||`` subject to
    ``sum_k c_k = 1``; each weight multiplies the newer end of its difference.
    """
    if len(buf) == 0:
        raise ValueError("cannot extrapolate from an empty buffer")
    if len(buf) < buf.K + 1:
        return ExtrapolationResult(buf.latest().copy(), None, "fallback_last")
    R = buf.stacked()
    U = np.diff(R, axis=0)            # (K, d), row k = r_{k+1} - r_k
    G = U @ U.T
    K = buf.K
    cbar = _cholesky_solve(G, np.ones(K)) if np.trace(G) > 0 else None
    if cbar is not None and np.isfinite(cbar).all() and cbar.sum() != 0:
        c = cbar / cbar.sum()
        flag = "ok"
    else:
        if not np.trace(G) > 0:
            return ExtrapolationResult(buf.latest().copy(), None, "fallback_last")
        # eliminate the constraint with c_K = 1 - sum_{k<K} c_k
        V = (U[:-1] - U[-1]).T
        z = np.linalg.lstsq(V, -U[-1], rcond=LSTSQ_RCOND)[0]
        c = np.append(z, 1.0 - z.sum())
        if not np.isfinite(c).all():
            return ExtrapolationResult(buf.latest().copy(), None, "fallback_last")
        flag = "reduced"
    return ExtrapolationResult(c @ R[1:], c, flag)


def residual_vector(kind: ModelKind, Xbeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Quantity whose sequence is extrapolated for each model."""
    if kind is ModelKind.LOGISTIC:
        return Xbeta.copy()
    return (y - Xbeta).ravel()


def accel_dual_point(kind: ModelKind, r_acc: np.ndarray, X: DesignMatrix,
                     y: np.ndarray, lam: float) -> DualCertificate:
    """Feasible dual point built from an extrapolated residual."""
    if kind is ModelKind.LOGISTIC:
        grad = grad_F(kind, r_acc, y)
    else:
        grad = -np.reshape(r_acc, y.shape)
    return rescale_dual(kind, grad, X, y, lam, provenance="extrapolated")


def best_dual(candidates) -> DualCertificate:
    """Candidate with the largest dual value; ties favour older certificates."""
    cands = [c for c in candidates if c is not None]
    if not cands:
        raise ValueError("no dual candidates")
    return max(cands, key=lambda c: (c.dual_value, PROVENANCE_RANK.get(c.provenance, -1)))
