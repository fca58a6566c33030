import io
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import sparse

from dualcert.dataset import (Dataset, DesignMatrix, LibsvmParseError, binarize,
                              dump_libsvm, load_dense_targets, load_libsvm,
                              normalize_columns, parse_libsvm, prune_rare_features,
                              spectral_norm_sq, synth_gaussian)


def test_parse_two_lines():
    ds = parse_libsvm("1 1:1.0 3:2.0\n-1 2:0.5\n")
    assert (ds.n, ds.p, ds.X.nnz) == (2, 3, 3)
    np.testing.assert_array_equal(ds.y, [1, -1])
    np.testing.assert_array_equal(ds.X.toarray(), [[1, 0, 2], [0, 0.5, 0]])


def test_parse_drops_explicit_zero():
    ds = parse_libsvm("1 2:0.0\n")
    assert ds.p == 2 and ds.X.nnz == 0


def test_parse_accepts_bytes_and_comments():
    ds = parse_libsvm(b"# header\n2.5 1:3 # trailing\n\n-0.5 4:1e-3\n")
    np.testing.assert_array_equal(ds.y, [2.5, -0.5])
    assert ds.p == 4


@pytest.mark.parametrize("text, lineno", [
    ("1 1:1\nx 1:2\n", 2),
    ("1 0:1\n", 1),
    ("1 3:1 2:1\n", 1),
    ("1 1:a\n", 1),
    ("1 1:1\n1 12\n", 2),
])
def test_parse_errors_carry_line_number(text, lineno):
    with pytest.raises(LibsvmParseError) as exc:
        parse_libsvm(text)
    assert exc.value.lineno == lineno


def test_parse_empty_stream():
    with pytest.raises(ValueError):
        parse_libsvm("")


def test_parse_n_features_override():
    assert parse_libsvm("1 2:1\n", n_features=10).p == 10
    with pytest.raises(ValueError):
        parse_libsvm("1 5:1\n", n_features=3)


def test_binary_labels():
    ds = parse_libsvm("0 1:1\n1 1:2\n-1 1:3\n", labels="binary")
    np.testing.assert_array_equal(ds.y, [-1, 1, -1])
    assert ds.is_binary()


@pytest.mark.skipif("LEUKEMIA_PATH" not in os.environ, reason="leukemia file not available")
def test_leukemia_shape():
    ds = load_libsvm(os.environ["LEUKEMIA_PATH"])
    assert (ds.n, ds.p) == (72, 7129)
    assert ds.X.nnz == 72 * 7129


def _random_sparse(seed, n=15, p=12, density=0.3):
    rng = np.random.default_rng(seed)
    M = sparse.random(n, p, density=density, format="csc", random_state=rng)
    M.data = np.round(M.data * 100 - 50, 3)
    return M


@given(st.integers(0, 10_000))
def test_libsvm_round_trip(seed):
    M = _random_sparse(seed)
    y = np.random.default_rng(seed).standard_normal(M.shape[0])
    ds = Dataset(DesignMatrix(M), y)
    buf = io.StringIO()
    dump_libsvm(ds, buf)
    back = parse_libsvm(buf.getvalue(), n_features=ds.p)
    np.testing.assert_array_equal(back.y, ds.y)
    assert (back.X.data != ds.X.data).nnz == 0
    np.testing.assert_array_equal(back.X.data.indptr, ds.X.data.indptr)


def test_load_files(tmp_path):
    f = tmp_path / "d.svm"
    f.write_text("1 1:1 2:2\n-1 2:3\n")
    ds = load_libsvm(f)
    assert ds.provenance["path"] == str(f)
    t = tmp_path / "Y.txt"
    t.write_text("1 2\n3 4\n")
    np.testing.assert_array_equal(load_dense_targets(t), [[1, 2], [3, 4]])


@given(st.integers(0, 10_000))
def test_sparse_storage_invariants(seed):
    M = _random_sparse(seed)
    if M.nnz:
        M.data[0] = 0.0   # explicit stored zero, must be dropped
    X = DesignMatrix(M)
    data, indices, indptr = X.csc_arrays()
    assert np.all(data != 0)
    for j in range(X.p):
        rows = indices[indptr[j]:indptr[j + 1]]
        assert np.all(np.diff(rows) > 0) and np.all(rows < X.n)
    ref = np.linalg.norm(M.toarray(), axis=0)
    np.testing.assert_allclose(X.column_norms, ref, rtol=1e-12)


def test_dense_csc_view_matches_matrix():
    A = np.arange(12.0).reshape(3, 4)
    data, indices, indptr = DesignMatrix(A).csc_arrays()
    rebuilt = sparse.csc_matrix((data, indices, indptr), shape=A.shape).toarray()
    np.testing.assert_array_equal(rebuilt, A)


def test_dataset_dimension_checks():
    X = DesignMatrix(np.eye(3))
    with pytest.raises(ValueError):
        Dataset(X, np.zeros(2))
    with pytest.raises(ValueError):
        Dataset(X, np.zeros((3, 0)))
    assert Dataset(X, np.zeros((3, 2))).is_multitask


def test_normalize_examples():
    A = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 0.0]])
    ds, scales = normalize_columns(Dataset(DesignMatrix(A), np.zeros(2)))
    np.testing.assert_allclose(ds.X.toarray()[:, 0], [0.6, 0.8])
    np.testing.assert_array_equal(ds.X.toarray()[:, 1], [0, 0])
    np.testing.assert_allclose(scales, [5, 0, 1])
    ds, scales = normalize_columns(Dataset(DesignMatrix(np.eye(3)), np.zeros(3)))
    np.testing.assert_array_equal(ds.X.toarray(), np.eye(3))
    np.testing.assert_array_equal(scales, 1)


@given(st.integers(0, 10_000), st.booleans())
def test_normalized_norms_are_zero_or_one(seed, use_sparse):
    M = _random_sparse(seed, density=0.15)
    X = DesignMatrix(M if use_sparse else M.toarray())
    ds, _ = normalize_columns(Dataset(X, np.zeros(X.n)))
    recomputed = np.linalg.norm(ds.X.toarray(), axis=0)
    assert np.all((np.abs(recomputed - 1) < 1e-12) | (recomputed == 0))
    assert set(np.unique(ds.X.column_norms)) <= {0.0, 1.0}


def test_prune_boundary():
    A = np.zeros((6, 3))
    A[:3, 0] = 1     # 3 nonzeros, dropped
    A[:4, 1] = 1     # 4 nonzeros, kept
    A[:, 2] = 1
    ds = Dataset(DesignMatrix(sparse.csc_matrix(A)), np.zeros(6))
    out, kept = prune_rare_features(ds, 4)
    np.testing.assert_array_equal(kept, [1, 2])
    np.testing.assert_array_equal(out.X.toarray(), A[:, 1:])
    same, kept = prune_rare_features(ds, 0)
    assert same.p == 3 and list(kept) == [0, 1, 2]


def test_prune_dense_is_identity():
    ds = Dataset(DesignMatrix(np.eye(3)), np.zeros(3))
    out, kept = prune_rare_features(ds)
    assert out is ds and list(kept) == [0, 1, 2]


@given(st.integers(0, 10_000), st.integers(0, 6))
def test_prune_keeps_every_frequent_column(seed, min_nnz):
    M = _random_sparse(seed, n=10, p=20, density=0.3)
    nnz = np.diff(M.indptr)
    ds = Dataset(DesignMatrix(M), np.zeros(10))
    out, kept = prune_rare_features(ds, min_nnz)
    np.testing.assert_array_equal(kept, np.flatnonzero(nnz >= min_nnz))
    np.testing.assert_array_equal(out.X.toarray(), M.toarray()[:, kept])


def test_synth_deterministic():
    a = synth_gaussian(20, 50, 1.0, 5, 10.0, seed=0)
    b = synth_gaussian(20, 50, 1.0, 5, 10.0, seed=0)
    np.testing.assert_array_equal(a.X.toarray(), b.X.toarray())
    np.testing.assert_array_equal(a.y, b.y)
    assert not a.X.is_sparse
    assert np.count_nonzero(a.provenance["beta_true"]) == 5


def test_synth_noiseless_and_snr():
    ds = synth_gaussian(30, 40, 1.0, 5, np.inf, seed=3)
    beta = ds.provenance["beta_true"]
    np.testing.assert_array_equal(ds.y, ds.X.dot(beta))
    ds = synth_gaussian(30, 40, 1.0, 5, 4.0, seed=3)
    signal = ds.X.dot(ds.provenance["beta_true"])
    assert np.linalg.norm(signal) / np.linalg.norm(ds.y - signal) == pytest.approx(4.0)


def test_synth_sparse_and_multitask():
    ds = synth_gaussian(50, 80, 0.1, 4, 10.0, seed=1)
    assert ds.X.is_sparse
    assert ds.X.nnz == pytest.approx(0.1 * 50 * 80, rel=0.05)
    mt = synth_gaussian(20, 30, 1.0, 3, 10.0, seed=1, n_tasks=4)
    assert mt.y.shape == (20, 4)
    assert np.count_nonzero(np.any(mt.provenance["beta_true"] != 0, axis=1)) == 3


@pytest.mark.parametrize("kwargs", [dict(density=0.0), dict(density=1.5),
                                    dict(support_size=100), dict(snr=0.0)])
def test_synth_rejects_bad_arguments(kwargs):
    args = dict(n=10, p=20, density=1.0, support_size=2, snr=10.0)
    args.update(kwargs)
    with pytest.raises(ValueError):
        synth_gaussian(**args)


def test_binarize():
    ds = Dataset(DesignMatrix(np.eye(3)), np.array([-2.0, 0.0, 0.3]))
    np.testing.assert_array_equal(binarize(ds).y, [-1, 1, 1])


def test_spectral_norm_examples():
    assert spectral_norm_sq(DesignMatrix(np.eye(3))) == pytest.approx(1.0)
    assert spectral_norm_sq(DesignMatrix(np.diag([1.0, 2.0]))) == pytest.approx(4.0, rel=1e-6)
    assert spectral_norm_sq(DesignMatrix(np.zeros((3, 2)))) == 0.0
    A = np.random.default_rng(0).standard_normal((10, 15))
    ref = np.linalg.eigvalsh(A.T @ A).max()
    assert spectral_norm_sq(DesignMatrix(A)) == pytest.approx(ref, rel=1e-6)


@given(st.integers(0, 10_000), st.booleans())
def test_spectral_norm_bounds_column_norms(seed, use_sparse):
    M = _random_sparse(seed, density=0.4)
    X = DesignMatrix(M if use_sparse else M.toarray())
    assert spectral_norm_sq(X) >= X.column_norms.max() ** 2 - 1e-9
