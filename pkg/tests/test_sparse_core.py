import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_observed
from optspace.errors import ConvergenceError, InvalidArgumentError
from optspace.sparse_core import (
    ObservedMatrix,
    read_mtx,
    sample_mask,
    spectral_norm,
    top_k_svd,
    trim,
    write_mtx,
)


def test_observed_zero_is_kept():
    obs = ObservedMatrix(2, 2, [0, 1], [0, 1], [0.0, 3.0])
    assert obs.nnz == 2
    assert obs.epsilon == pytest.approx(1.0)
    assert trim(obs)[0].nnz == 2


def test_duplicates_rejected():
    with pytest.raises(InvalidArgumentError):
        ObservedMatrix(3, 3, [0, 0], [1, 1], [1.0, 2.0])


def test_out_of_range_rejected():
    with pytest.raises(InvalidArgumentError):
        ObservedMatrix(3, 3, [3], [0], [1.0])


def test_sample_mask_full_and_empty():
    rows, cols = sample_mask(4, 4, 16, seed=3)
    assert set(zip(rows, cols)) == {(i, j) for i in range(4) for j in range(4)}
    rows, cols = sample_mask(4, 4, 0, seed=3)
    assert rows.size == cols.size == 0


def test_sample_mask_too_large():
    with pytest.raises(InvalidArgumentError):
        sample_mask(4, 4, 17, seed=0)


def test_sample_mask_deterministic_and_distinct():
    a = sample_mask(50, 40, 300, seed=11)
    b = sample_mask(50, 40, 300, seed=11)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert len(set(zip(*a))) == 300


def test_sample_mask_uniform_marginal():
    # each couple is in a uniform 1000-subset of 10^4 cells with probability 0.1
    hits = np.zeros(3)
    probes = [(0, 0), (57, 13), (99, 99)]
    n_seeds = 10_000
    for seed in range(n_seeds):
        rows, cols = sample_mask(100, 100, 1000, seed)
        keys = set((rows * 100 + cols).tolist())
        hits += [i * 100 + j in keys for i, j in probes]
    freq = hits / n_seeds
    assert np.all(np.abs(freq - 0.1) <= 0.01), freq


def test_trim_nothing_over_represented():
    obs = ObservedMatrix.from_dense(np.arange(16.0).reshape(4, 4))
    out, info = trim(obs)
    assert out.same_entries(obs)
    assert info.kept_rows.all() and info.kept_cols.all()


def test_trim_heavy_row():
    # |E| = 8 with m = 4 gives a row threshold of 4; row 0 carries 5 entries
    obs = ObservedMatrix(4, 8, [0, 0, 0, 0, 0, 1, 2, 3], [0, 1, 2, 3, 4, 0, 1, 2], np.arange(1.0, 9.0))
    out, info = trim(obs)
    assert info.row_threshold == 4.0
    assert not info.kept_rows[0] and info.kept_rows[1:].all()
    assert info.kept_cols.all()
    assert out.nnz == 3
    assert set(out.rows.tolist()) == {1, 2, 3}


def test_trim_single_column():
    # all 8 entries in column 0 of an 8x4 matrix: column threshold 2*8/4 = 4
    obs = ObservedMatrix(8, 4, np.arange(8), np.zeros(8, dtype=int), np.ones(8))
    out, info = trim(obs)
    assert info.col_threshold == 4.0
    assert not info.kept_cols[0]
    assert out.nnz == 0


def test_trim_threshold_tie_is_kept():
    # row 0 holds exactly 2|E|/m entries
    obs = ObservedMatrix(4, 4, [0, 0, 1, 2], [0, 1, 2, 3], np.ones(4))
    out, info = trim(obs)
    assert info.row_threshold == 2.0
    assert out.nnz == 4


def test_trim_is_single_pass():
    # removing row 0 drops |E| from 12 to 6; with recomputed thresholds (2*6/6 = 2)
    # row 1 (2 entries) would survive a second pass too, but column 5's share grows.
    rows = [0] * 6 + [1, 1, 2, 3, 4, 5]
    cols = [0, 1, 2, 3, 4, 5] + [5, 4, 5, 5, 3, 2]
    obs = ObservedMatrix(6, 6, rows, cols, np.ones(12))
    out, info = trim(obs)
    # input thresholds: 2*12/6 = 4 for rows and columns
    assert info.row_threshold == 4.0 and info.col_threshold == 4.0
    assert not info.kept_rows[0]
    # column 5 has 4 entries in the input (ties kept)
    assert info.kept_cols[5]
    assert out.nnz == 6
    # a second pass with thresholds from the trimmed matrix (2*6/6 = 2) would drop column 5
    again, info2 = trim(out)
    assert info2.col_threshold == 2.0
    assert not info2.kept_cols[5]
    assert again.nnz < out.nnz


@settings(max_examples=50, deadline=None)
@given(m=st.integers(2, 30), n=st.integers(2, 30), frac=st.floats(0.05, 0.9), seed=st.integers(0, 10_000))
def test_trim_degree_bounds(m, n, frac, seed):
    e = max(1, int(frac * m * n))
    obs = random_observed(m, n, e, seed)
    out, info = trim(obs)
    assert out.row_counts().max(initial=0) <= 2 * e / m
    assert out.col_counts().max(initial=0) <= 2 * e / n
    # every kept entry comes from the input, with the same value
    keys_in = dict(zip((obs.rows * n + obs.cols).tolist(), obs.values.tolist()))
    for i, j, v in zip(out.rows, out.cols, out.values):
        assert keys_in[i * n + j] == v


@settings(max_examples=30, deadline=None)
@given(m=st.integers(3, 40), n=st.integers(3, 40), frac=st.floats(0.05, 0.6), seed=st.integers(0, 10_000))
def test_trimmed_pattern_norm(m, n, frac, seed):
    e = max(1, int(frac * m * n))
    obs = random_observed(m, n, e, seed)
    out, _ = trim(obs.pattern())
    two_eps = 2 * obs.epsilon
    assert spectral_norm(out, tol=1e-10) <= two_eps * (1 + 1e-6)


def test_spectral_norm_diag():
    obs = ObservedMatrix.from_dense(np.diag([3.0, 1.0]))
    assert spectral_norm(obs, tol=1e-12) == pytest.approx(3.0, rel=1e-12)


def test_spectral_norm_rank_one(rng):
    x = rng.standard_normal(7)
    y = rng.standard_normal(5)
    obs = ObservedMatrix.from_dense(np.outer(x, y))
    assert spectral_norm(obs, tol=1e-12) == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y), rel=1e-12)


def test_spectral_norm_empty():
    assert spectral_norm(ObservedMatrix(3, 4, [], [], []), tol=1e-8) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_spectral_norm_dense_oracle(seed):
    tol = 1e-10
    obs = random_observed(20, 15, 90, seed)
    expected = np.linalg.svd(obs.to_dense(), compute_uv=False)[0]
    got = spectral_norm(obs, tol=tol)
    assert abs(got - expected) <= tol * expected
    assert got <= obs.frobenius_norm()


def test_spectral_norm_clustered_top_values():
    # (s2/s1)^2 = 0.9977 here: a single power vector would need ~8000 sweeps
    rows, cols = sample_mask(200, 200, 16000, 2)
    obs = trim(ObservedMatrix(200, 200, rows, cols, np.random.default_rng(101).standard_normal(16000)))[0]
    s = np.linalg.svd(obs.to_dense(), compute_uv=False)
    assert (s[1] / s[0]) ** 2 > 0.99
    assert spectral_norm(obs, tol=1e-8) == pytest.approx(s[0], rel=1e-8)


def test_spectral_norm_iteration_cap():
    obs = random_observed(60, 60, 1500, 0)
    with pytest.raises(ConvergenceError) as info:
        spectral_norm(obs, tol=1e-14, max_iters=3)
    assert info.value.estimate > 0


def test_top_k_identity():
    svd = top_k_svd(ObservedMatrix.from_dense(np.eye(5)), 2)
    np.testing.assert_allclose(svd.sigmas, [1.0, 1.0], atol=1e-12)


def test_top_k_rank_two_reconstruction(rng):
    A = rng.standard_normal((12, 2)) @ rng.standard_normal((2, 9))
    svd = top_k_svd(ObservedMatrix.from_dense(A), 2)
    assert np.linalg.norm(svd.reconstruct() - A) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_top_k_dense_oracle(seed):
    obs = random_observed(30, 20, 250, seed)
    svd = top_k_svd(obs, 3, tol=1e-12)
    expected = np.linalg.svd(obs.to_dense(), compute_uv=False)[:3]
    np.testing.assert_allclose(svd.sigmas, expected, rtol=1e-10)
    assert np.all(np.diff(svd.sigmas) <= 0)
    np.testing.assert_allclose(svd.left_vectors.T @ svd.left_vectors, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(svd.right_vectors.T @ svd.right_vectors, np.eye(3), atol=1e-10)


def test_top_k_out_of_range():
    obs = random_observed(5, 4, 10, 0)
    with pytest.raises(InvalidArgumentError):
        top_k_svd(obs, 0)
    with pytest.raises(InvalidArgumentError):
        top_k_svd(obs, 5)


def test_top_k_iteration_cap_flags_partial():
    obs = random_observed(80, 80, 2000, 1)
    with pytest.raises(ConvergenceError) as info:
        top_k_svd(obs, 3, tol=1e-15, max_iters=2, oversample=0)
    assert info.value.estimate.converged is False
    assert info.value.estimate.k == 3


def test_mtx_round_trip(tmp_path):
    obs = random_observed(7, 5, 12, 4)
    obs = obs.with_values(np.append(obs.values[:-1], 0.0))
    path = tmp_path / "obs.mtx"
    write_mtx(path, obs)
    text = path.read_text().splitlines()
    assert text[0] == "%%MatrixMarket matrix coordinate real general"
    assert text[1] == "7 5 12"
    i, j, _ = text[2].split()
    assert int(i) == obs.rows[0] + 1 and int(j) == obs.cols[0] + 1
    back = read_mtx(path)
    assert back.same_entries(obs)


def test_mtx_comments_and_errors(tmp_path):
    path = tmp_path / "a.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n% note\n2 2 2\n1 1 1.5\n2 2 -1\n")
    obs = read_mtx(path)
    np.testing.assert_array_equal(obs.to_dense(), [[1.5, 0.0], [0.0, -1.0]])
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.5\n1 1 2\n")
    with pytest.raises(InvalidArgumentError):
        read_mtx(path)
    path.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
    with pytest.raises(InvalidArgumentError):
        read_mtx(path)
