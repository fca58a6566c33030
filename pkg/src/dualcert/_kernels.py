"""Compiled column kernels. All take the matrix as CSC arrays.

``model`` codes: 0 quadratic, 1 logistic.
"""

import numpy as np
from numba import njit

QUADRATIC = 0
LOGISTIC = 1


@njit(cache=True)
def _sigmoid(x):
    if x >= 0.0:
        z = np.exp(-x)
        return 1.0 / (1.0 + z)
    z = np.exp(x)
    return z / (1.0 + z)


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _col_grad(data, indices, start, end, y, xbeta, model):
    g = 0.0
    if model == QUADRATIC:
        for k in range(start, end):
            i = indices[k]
            g += data[k] * (xbeta[i] - y[i])
    else:
        for k in range(start, end):
            i = indices[k]
            g -= data[k] * y[i] * _sigmoid(-y[i] * xbeta[i])
    return g


@njit(cache=True)
def cd_epoch(data, indices, indptr, y, xbeta, beta, lam, norms2, gamma, features, model):
    """One cyclic pass over ``features`` (in the given order), in place."""
    for j in features:
        if norms2[j] == 0.0:
            continue
        start = indptr[j]
        end = indptr[j + 1]
        g = _col_grad(data, indices, start, end, y, xbeta, model)
        step = gamma / norms2[j]
        old = beta[j]
        new = _soft(old - step * g, lam * step)
        if new != old:
            beta[j] = new
            diff = new - old
            for k in range(start, end):
                xbeta[indices[k]] += diff * data[k]


@njit(cache=True)
def bcd_epoch(data, indices, indptr, Y, XB, B, lam, norms2, features):
    """One cyclic pass of block soft-thresholding over rows of ``B``."""
    q = Y.shape[1]
    tmp = np.empty(q)
    for j in features:
        if norms2[j] == 0.0:
            continue
        start = indptr[j]
        end = indptr[j + 1]
        tmp[:] = 0.0
        for k in range(start, end):
            i = indices[k]
            for t in range(q):
                tmp[t] += data[k] * (Y[i, t] - XB[i, t])
        nrm = 0.0
        for t in range(q):
            tmp[t] = B[j, t] + tmp[t] / norms2[j]
            nrm += tmp[t] * tmp[t]
        nrm = np.sqrt(nrm)
        thresh = lam / norms2[j]
        shrink = 0.0 if nrm <= thresh else 1.0 - thresh / nrm
        changed = False
        for t in range(q):
            new = shrink * tmp[t]
            tmp[t] = new - B[j, t]
            if tmp[t] != 0.0:
                changed = True
            B[j, t] = new
        if changed:
            for k in range(start, end):
                i = indices[k]
                for t in range(q):
                    XB[i, t] += tmp[t] * data[k]


@njit(cache=True)
def weighted_norms2(data, indices, indptr, w):
    """``x_j^T diag(w) x_j`` for every column."""
    p = indptr.shape[0] - 1
    out = np.zeros(p)
    for j in range(p):
        s = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            s += data[k] * data[k] * w[indices[k]]
        out[j] = s
    return out


@njit(cache=True)
def newton_direction_cd(data, indices, indptr, xt_grad, D, L, beta, lam,
                        delta, xdelta, max_iter, min_iter, tol):
    """Cyclic CD on the curvature-weighted Lasso giving ``beta + delta``.

    ``delta`` and ``xdelta`` are updated in place; returns the pass count.
    """
    p = beta.shape[0]
    passes = 0
    for it in range(max_iter):
        passes = it + 1
        tau = 0.0
        for j in range(p):
            if L[j] == 0.0:
                continue
            start = indptr[j]
            end = indptr[j + 1]
            xdx = 0.0
            for k in range(start, end):
                i = indices[k]
                xdx += data[k] * D[i] * xdelta[i]
            u = beta[j] + delta[j]
            new_u = _soft(u - (xt_grad[j] + xdx) / L[j], lam / L[j])
            if new_u != u:
                delta[j] = new_u - beta[j]
                diff = new_u - u
                for k in range(start, end):
                    xdelta[indices[k]] += diff * data[k]
                tau += (diff * L[j]) ** 2
        if tau <= tol and passes >= min_iter:
            break
    return passes
