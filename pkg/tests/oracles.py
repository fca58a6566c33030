"""Reference computations written independently of the package internals.

Everything here uses dense numpy arrays and textbook formulas so that the
package can be checked against code that shares none of its kernels.
"""

from __future__ import annotations

import numpy as np


def conj_dual(kind: str, theta: np.ndarray, y: np.ndarray, lam: float) -> float:
    """``-sum_i f_i^*(-lam theta_i)`` from the explicit conjugates.

    quadratic: f(t) = (y - t)^2 / 2, f^*(u) = u^2 / 2 + u y
    logistic:  f(t) = log(1 + exp(-y t)), f^*(u) = a log a + (1 - a) log(1 - a),
               a = -u y in [0, 1]
    """
    u = -lam * theta
    if kind == "logreg":
        a = -u * y
        if np.any(a < -1e-12) or np.any(a > 1 + 1e-12):
            return -np.inf
        a = np.clip(a, 0, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(a > 0, a * np.log(a), 0.0) + np.where(a < 1, (1 - a) * np.log(1 - a), 0.0)
        return -float(ent.sum())
    return -float((0.5 * u ** 2 + u * y).sum())


def primal(kind: str, X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    z = X @ beta
    if kind == "logreg":
        fit = np.sum(np.log1p(np.exp(-y * z)))
    else:
        fit = 0.5 * np.sum((y - z) ** 2)
    if kind == "mtl":
        pen = np.sum(np.linalg.norm(beta, axis=1))
    else:
        pen = np.sum(np.abs(beta))
    return float(fit + lam * pen)


def lambda_max_closed(kind: str, X: np.ndarray, y: np.ndarray) -> float:
    """Closed forms: ||X^T y||_inf, ||X^T y||_inf / 2, max_j ||x_j^T Y||_2."""
    if kind == "lasso":
        return float(np.max(np.abs(X.T @ y)))
    if kind == "logreg":
        return float(np.max(np.abs(X.T @ y)) / 2)
    return float(np.max(np.linalg.norm(X.T @ y, axis=1)))


def fista(kind: str, X: np.ndarray, y: np.ndarray, lam: float, n_iter: int = 20000,
          beta0: np.ndarray | None = None) -> np.ndarray:
    """Accelerated proximal gradient with restart, pure numpy."""
    L = np.linalg.norm(X, 2) ** 2 * (0.25 if kind == "logreg" else 1.0)
    shape = (X.shape[1],) + y.shape[1:]
    beta = np.zeros(shape) if beta0 is None else beta0.copy()
    z = beta.copy()
    t = 1.0
    obj = primal(kind, X, y, beta, lam)
    for _ in range(n_iter):
        Xz = X @ z
        if kind == "logreg":
            g = X.T @ (-y / (1 + np.exp(y * Xz)))
        else:
            g = X.T @ (Xz - y)
        w = z - g / L
        if kind == "mtl":
            nrm = np.linalg.norm(w, axis=1, keepdims=True)
            new = np.maximum(1 - lam / L / np.maximum(nrm, 1e-300), 0) * w
        else:
            new = np.sign(w) * np.maximum(np.abs(w) - lam / L, 0)
        new_obj = primal(kind, X, y, new, lam)
        if new_obj > obj:          # adaptive restart
            t = 1.0
            z = beta.copy()
            continue
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        z = new + (t - 1) / t_new * (new - beta)
        beta, t, obj = new, t_new, new_obj
    return beta


def textbook_cd(X: np.ndarray, y: np.ndarray, lam: float, beta: np.ndarray,
                passes: int) -> np.ndarray:
    """Plain cyclic CD for 0.5 ||y - X u||^2 + lam ||u||_1, residual recomputed."""
    u = beta.astype(float).copy()
    for _ in range(passes):
        for j in range(X.shape[1]):
            nj = X[:, j] @ X[:, j]
            if nj == 0:
                continue
            r = y - X @ u
            v = u[j] + X[:, j] @ r / nj
            u[j] = np.sign(v) * max(abs(v) - lam / nj, 0.0)
    return u


def explicit_newton_direction(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float,
                              passes: int) -> np.ndarray:
    """Materialise the weighted Lasso: Xt = D^1/2 X,
    yt = D^1/2 X beta - D^-1/2 pinv(X)^T X^T grad F, and solve it by CD from beta."""
    z = X @ beta
    s = 1 / (1 + np.exp(-z))
    D = s * (1 - s)
    grad = -y / (1 + np.exp(y * z))
    Xt = np.sqrt(D)[:, None] * X
    yt = np.sqrt(D) * z - (np.linalg.pinv(X).T @ (X.T @ grad)) / np.sqrt(D)
    return textbook_cd(Xt, yt, lam, beta, passes) - beta


def var_sequence(A: np.ndarray, b: np.ndarray, r0: np.ndarray, T: int) -> list[np.ndarray]:
    seq = [r0]
    for _ in range(T - 1):
        seq.append(A @ seq[-1] + b)
    return seq


def random_symmetric(n: int, rank: int, norm: float, rng) -> np.ndarray:
    """Symmetric matrix of given rank whose largest |eigenvalue| is ``norm``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(-norm, norm, size=rank)
    eig[np.argmax(np.abs(eig))] = norm * np.sign(eig[np.argmax(np.abs(eig))] or 1.0)
    return (Q[:, :rank] * eig) @ Q[:, :rank].T


def central_diff(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x, dtype=float)
    flat = g.reshape(-1)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        e = e.reshape(x.shape)
        flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g
