"""Design matrices, targets, LIBSVM I/O, preprocessing and synthetic data."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy import sparse


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class DesignMatrix:
    """Column-accessible design matrix, dense (Fortran order) or CSC.

    Sparse storage is kept canonical: sorted row indices, no explicit zeros.
    Column norms are computed once at construction.
    """

    def __init__(self, data):
        if sparse.issparse(data):
            data = sparse.csc_matrix(data, dtype=np.float64, copy=True)
            data.eliminate_zeros()
            data.sort_indices()
            self.data = data
            self.column_norms = np.sqrt(np.asarray(data.multiply(data).sum(axis=0)).ravel())
        else:
            data = np.asfortranarray(data, dtype=np.float64)
            if data.ndim != 2:
                raise ValueError("design matrix must be 2-D")
            self.data = data
            self.column_norms = np.sqrt((data ** 2).sum(axis=0))
        self._csc = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.data)

    @property
    def nnz(self) -> int:
        if self.is_sparse:
            return int(self.data.nnz)
        return int(np.count_nonzero(self.data))

    def column_nnz(self) -> np.ndarray:
        if self.is_sparse:
            return np.diff(self.data.indptr)
        return np.count_nonzero(self.data, axis=0)

    def csc_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(data, indices, indptr)`` view used by the compiled kernels.

        Dense matrices are laid out as full CSC (every entry stored), which
        lets a single set of column kernels serve both storages.
        """
        if self._csc is None:
            if self.is_sparse:
                m = self.data
                self._csc = (m.data, m.indices.astype(np.int64), m.indptr.astype(np.int64))
            else:
                n, p = self.shape
                vals = np.ascontiguousarray(self.data.T).ravel()
                idx = np.tile(np.arange(n, dtype=np.int64), p)
                ptr = np.arange(0, n * p + 1, n, dtype=np.int64)
                self._csc = (vals, idx, ptr)
        return self._csc

    def dot(self, v: np.ndarray) -> np.ndarray:
        """``X @ v`` for a vector or a (p, q) matrix."""
        return np.asarray(self.data @ v)

    def tdot(self, u: np.ndarray) -> np.ndarray:
        """``X.T @ u`` for a vector or a (n, q) matrix."""
        return np.asarray(self.data.T @ u)

    def columns(self, idx) -> "DesignMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return DesignMatrix(self.data[:, idx])

    def toarray(self) -> np.ndarray:
        return self.data.toarray() if self.is_sparse else np.array(self.data)


@dataclass(frozen=True)
class Dataset:
    X: DesignMatrix
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim not in (1, 2):
            raise ValueError("targets must be a vector or an (n, q) matrix")
        if y.shape[0] != self.X.n:
            raise ValueError(f"targets have {y.shape[0]} rows, X has {self.X.n}")
        if y.ndim == 2 and y.shape[1] < 1:
            raise ValueError("multitask targets need q >= 1")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def p(self) -> int:
        return self.X.p

    @property
    def is_multitask(self) -> bool:
        return self.y.ndim == 2

    def is_binary(self) -> bool:
        return self.y.ndim == 1 and bool(np.all(np.abs(self.y) == 1.0))


def _as_text(stream) -> TextIO:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode())
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.BufferedIOBase) or "b" in getattr(stream, "mode", ""):
        return io.TextIOWrapper(stream, encoding="utf-8")
    return stream


def parse_libsvm(stream, labels: str = "any", n_features: int | None = None) -> Dataset:
    """Parse LIBSVM text (``label idx:val ...``, 1-based indices).

    Parameters
    ----------
    stream : text or binary file object, str or bytes
    labels : {"any", "binary"}
        With "binary", labels must be +-1 (0 is mapped to -1, as in some
        LIBSVM files using {0, 1}).
    n_features : int, optional
        Force the feature count; must be at least the largest index seen.
    """
    rows, cols, vals, y = [], [], [], []
    n = 0
    max_idx = 0
    for lineno, line in enumerate(_as_text(stream), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(lineno, f"bad label {tokens[0]!r}") from None
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"expected idx:val, got {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(lineno, f"non-numeric token {tok!r}") from None
            if idx <= 0:
                raise LibsvmParseError(lineno, f"feature index must be >= 1, got {idx}")
            if idx < prev:
                raise LibsvmParseError(lineno, "feature indices must be nondecreasing")
            prev = idx
            max_idx = max(max_idx, idx)
            if val != 0.0:
                rows.append(n)
                cols.append(idx - 1)
                vals.append(val)
        y.append(label)
        n += 1
    if n == 0:
        raise ValueError("empty LIBSVM stream")
    p = max_idx
    if n_features is not None:
        if n_features < max_idx:
            raise ValueError(f"n_features={n_features} smaller than max index {max_idx}")
        p = n_features
    X = sparse.csc_matrix((vals, (rows, cols)), shape=(n, p))
    # duplicate (row, col) pairs would be summed by scipy; repeated indices
    # are legal under "nondecreasing" so we keep that behaviour
    y = np.asarray(y, dtype=np.float64)
    if labels == "binary":
        y = np.where(y > 0, 1.0, -1.0)
    return Dataset(DesignMatrix(X), y, {"source": "libsvm"})


def load_libsvm(path, labels: str = "any", n_features: int | None = None) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        ds = parse_libsvm(fh, labels=labels, n_features=n_features)
    return Dataset(ds.X, ds.y, {"source": "libsvm", "path": str(path)})


def dump_libsvm(ds: Dataset, stream: TextIO) -> None:
    """Write a single-target dataset in LIBSVM format (``%.17g`` values)."""
    if ds.is_multitask:
        raise ValueError("LIBSVM format holds one target per sample")
    X = sparse.csr_matrix(ds.X.data)
    X.sort_indices()
    for i in range(X.shape[0]):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        feats = " ".join(f"{j + 1}:{v:.17g}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))
        stream.write(f"{ds.y[i]:.17g} {feats}".rstrip() + "\n")


def load_dense_targets(path) -> np.ndarray:
    """Whitespace separated matrix, one row per sample."""
    Y = np.loadtxt(path, dtype=np.float64, ndmin=2)
    return Y


def normalize_columns(ds: Dataset) -> tuple[Dataset, np.ndarray]:
    """Scale every nonzero column to unit norm; zero columns keep scale 0."""
    scales = ds.X.column_norms.copy()
    inv = np.zeros_like(scales)
    nz = scales > 0
    inv[nz] = 1.0 / scales[nz]
    if ds.X.is_sparse:
        X = ds.X.data @ sparse.diags(inv)
        X = X.tocsc()
    else:
        X = ds.X.data * inv
        X[:, ~nz] = ds.X.data[:, ~nz]
    Xn = DesignMatrix(X)
    # exact unit norms, avoids 1 +- ulp drift in the recomputed values
    Xn.column_norms[nz] = 1.0
    return Dataset(Xn, ds.y, dict(ds.provenance, normalized=True)), scales


def prune_rare_features(ds: Dataset, min_nnz: int = 4) -> tuple[Dataset, np.ndarray]:
    """Drop sparse columns with strictly fewer than ``min_nnz`` nonzeros."""
    if not ds.X.is_sparse:
        return ds, np.arange(ds.p)
    kept = np.flatnonzero(ds.X.column_nnz() >= min_nnz)
    if kept.size == ds.p:
        return ds, kept
    return Dataset(ds.X.columns(kept), ds.y, dict(ds.provenance, min_nnz=min_nnz)), kept


def synth_gaussian(n: int, p: int, density: float = 1.0, support_size: int = 10,
                   snr: float = 10.0, seed: int = 0, n_tasks: int = 1) -> Dataset:
    """Gaussian design with a planted sparse coefficient vector.

    ``y = X beta + noise`` with ``||X beta|| / ||noise|| = snr``; ``snr=inf``
    gives noiseless targets. Dense storage iff ``density == 1``. With
    ``n_tasks > 1`` the planted coefficients are row-sparse and y is (n, q).
    """
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if not 0 <= support_size <= p:
        raise ValueError(f"support_size must lie in [0, p], got {support_size}")
    if not snr > 0:
        raise ValueError("snr must be positive")
    if n_tasks < 1:
        raise ValueError("n_tasks must be >= 1")
    rng = np.random.default_rng(seed)
    if density == 1.0:
        X = DesignMatrix(rng.standard_normal((n, p)))
    else:
        M = sparse.random(n, p, density=density, format="csc", random_state=rng,
                          data_rvs=rng.standard_normal)
        X = DesignMatrix(M)
    support = np.sort(rng.choice(p, size=support_size, replace=False))
    shape = (p,) if n_tasks == 1 else (p, n_tasks)
    beta = np.zeros(shape)
    beta[support] = rng.standard_normal((support_size,) + shape[1:])
    signal = X.dot(beta)
    if np.isinf(snr):
        y = signal
    else:
        noise = rng.standard_normal(signal.shape)
        scale = np.linalg.norm(signal) / (snr * np.linalg.norm(noise)) if np.any(signal) else 1.0
        y = signal + scale * noise
    prov = dict(source="synth", n=n, p=p, density=density, support_size=support_size,
                snr=snr, seed=seed, n_tasks=n_tasks, beta_true=beta)
    return Dataset(X, y, prov)


def binarize(ds: Dataset) -> Dataset:
    """Map regression targets to +-1 labels by sign (0 goes to +1)."""
    y = np.where(ds.y >= 0, 1.0, -1.0)
    return Dataset(ds.X, y, dict(ds.provenance, binarized=True))


def spectral_norm_sq(X: DesignMatrix, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest eigenvalue of ``X.T @ X`` by power iteration from all-ones."""
    v = np.ones(X.p) / np.sqrt(X.p)
    est = 0.0
    for _ in range(max_iter):
        Xv = X.dot(v)
        new = float(Xv @ Xv)  # Rayleigh quotient, v has unit norm
        if new == 0.0:
            return 0.0
        w = X.tdot(Xv)
        v = w / np.linalg.norm(w)
        if abs(new - est) <= tol * new:
            break
        est = new
    Xv = X.dot(v)
    return float(Xv @ Xv)
