import math

import numpy as np
import pytest

from zqual.properties import (
    AnalysisError,
    analyze_properties,
    autocorrelation,
    basic_stats,
    block_entropy,
    distribution,
    entropy,
    pca_summary,
    power_spectrum,
    smoothness,
)
from conftest import mem_dataset


# ---------------------------------------------------------------- basic stats

def test_basic_stats_simple():
    s = basic_stats(mem_dataset([1.0, 2.0, 3.0]))
    assert (s.min, s.max, s.range, s.avg) == (1.0, 3.0, 2.0, 2.0)


def test_basic_stats_constant():
    s = basic_stats(mem_dataset([4.5] * 10))
    assert s.range == 0.0 and s.avg == 4.5


def test_basic_stats_uniform_mean(rng):
    data = mem_dataset(rng.uniform(0, 1, 10**6))
    s = basic_stats(data)
    # oracle: independent pairwise summation
    expect = float(math.fsum(data.values.tolist()) / data.values.size)
    assert s.avg == pytest.approx(expect, abs=1e-12)
    assert abs(s.avg - 0.5) < 0.005


def test_basic_stats_empty_rejected():
    with pytest.raises(Exception):
        mem_dataset([])


# --------------------------------------------------------------- distribution

def test_distribution_two_halves():
    data = mem_dataset([0.0] * 50 + [1.0] * 50)
    h = distribution(data, bins=2)
    assert h.pdf.tolist() == [0.5, 0.5]
    assert h.cdf.tolist() == [0.5, 1.0]


def test_distribution_normalization(rng):
    h = distribution(mem_dataset(rng.normal(size=5000)), bins=37)
    assert abs(h.pdf.sum() - 1.0) < 1e-12
    assert abs(h.cdf[-1] - 1.0) < 1e-12
    assert (np.diff(h.cdf) >= -1e-15).all()
    assert h.counts.sum() == 5000


def test_distribution_uniform_counting_oracle(rng):
    values = rng.uniform(0, 1, 10**5)
    h = distribution(mem_dataset(values), bins=10)
    lo, hi = values.min(), values.max()
    width = (hi - lo) / 10
    # direct counting loop, max value into the last bin
    counts = np.zeros(10, dtype=int)
    for v in values:
        idx = min(int((v - lo) / width), 9)
        counts[idx] += 1
    np.testing.assert_array_equal(h.counts, counts)
    assert np.all(np.abs(h.pdf - 0.1) < 0.01)


def test_distribution_degenerate_range():
    h = distribution(mem_dataset([2.0] * 7), bins=16)
    assert h.bin_count == 1 and h.pdf.tolist() == [1.0]


# -------------------------------------------------------------------- entropy

def brute_entropy(values, eb):
    counts = {}
    for v in values:
        s = math.floor(v / eb)
        counts[s] = counts.get(s, 0) + 1
    n = len(values)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


def test_entropy_constant_zero():
    assert entropy(mem_dataset([3.3] * 100), 0.1) == 0.0


def test_entropy_two_symbols_one_bit():
    data = mem_dataset([0.0, 1.0] * 50)
    assert entropy(data, 0.5) == 1.0


def test_entropy_matches_bruteforce(rng):
    values = rng.uniform(0, 1, 1000)
    got = entropy(mem_dataset(values), 0.25)
    assert got == pytest.approx(brute_entropy(values, 0.25), abs=1e-12)


def test_entropy_bounds_and_monotonicity(rng):
    values = rng.normal(size=2000)
    data = mem_dataset(values)
    previous = math.inf
    for eb in (1e-3, 1e-2, 1e-1):
        h = entropy(data, eb)
        assert 0.0 <= h <= math.log2(values.size)
        assert h <= previous
        previous = h


def test_entropy_floor_toward_minus_inf():
    # -0.1 with eb 0.25 lands in symbol -1, distinct from +0.1's symbol 0
    assert entropy(mem_dataset([-0.1, 0.1] * 10), 0.25) == 1.0


def test_entropy_rejects_bad_bound():
    with pytest.raises(AnalysisError):
        entropy(mem_dataset([1.0, 2.0]), 0.0)


# -------------------------------------------------------------- block entropy

def test_block_entropy_identity_partition(rng):
    values = rng.uniform(0, 1, (20, 30))
    data = mem_dataset(values, dims=(20, 30))
    emap = block_entropy(data, 0.1, (20, 30))
    assert emap.values.size == 1
    assert emap.values[0] == pytest.approx(entropy(data, 0.1), abs=1e-12)
    assert emap.bound.kind == "absolute"


def test_block_entropy_grid_count(rng):
    data = mem_dataset(rng.uniform(0, 1, (200, 200)), dims=(200, 200))
    emap = block_entropy(data, 0.05, (100, 100))
    assert emap.grid_shape == (2, 2)
    assert emap.values.size == 4


def test_block_entropy_edge_blocks(rng):
    data = mem_dataset(rng.uniform(0, 1, (5, 7)), dims=(5, 7))
    emap = block_entropy(data, 0.1, (2, 3))
    assert emap.grid_shape == (3, 3)


def test_block_entropy_identifies_constant_half(rng):
    field = np.zeros((100, 100))
    field[:, 50:] = rng.uniform(0, 1, (100, 50))
    data = mem_dataset(field, dims=(100, 100))
    emap = block_entropy(data, 1e-3, (50, 50))
    grid = emap.values.reshape(2, 2)
    # left (constant) column strictly below right (noisy) column
    assert grid[0, 0] < grid[0, 1] and grid[1, 0] < grid[1, 1]
    # per-block brute-force oracle
    assert grid[1, 1] == pytest.approx(
        brute_entropy(field[50:, 50:].ravel(), 1e-3), abs=1e-12)


def test_block_entropy_rank_mismatch(rng):
    data = mem_dataset(rng.uniform(0, 1, (4, 4)), dims=(4, 4))
    with pytest.raises(AnalysisError, match="rank"):
        block_entropy(data, 0.1, (4,))


# ----------------------------------------------------------------- smoothness

def test_smoothness_ramp():
    data = mem_dataset(np.arange(50, dtype=float))
    first = smoothness(data, 0, 1)
    second = smoothness(data, 0, 2)
    assert np.all(first.field == 1.0)
    assert np.all(second.field == 0.0)
    assert first.field.shape == (49,)
    assert second.field.shape == (48,)


def test_smoothness_constant():
    data = mem_dataset(np.full(20, 3.0))
    assert np.all(smoothness(data, 0, 1).field == 0.0)
    assert np.all(smoothness(data, 0, 2).field == 0.0)


def test_smoothness_quadratic_second_derivative():
    i = np.arange(30, dtype=float)
    data = mem_dataset(i * i)
    # oracle: (i-1)^2 - 2 i^2 + (i+1)^2 = 2 exactly
    assert np.all(smoothness(data, 0, 2).field == 2.0)


def test_smoothness_shift_invariance(rng):
    # integer-valued floats so data + constant is exact
    values = rng.integers(-100, 100, size=(8, 9)).astype(float)
    a = smoothness(mem_dataset(values, dims=(8, 9)), 1, 1)
    b = smoothness(mem_dataset(values + 1024.0, dims=(8, 9)), 1, 1)
    np.testing.assert_array_equal(a.field, b.field)


def test_smoothness_errors():
    data = mem_dataset([1.0, 2.0])
    with pytest.raises(AnalysisError):
        smoothness(data, 1, 1)  # axis out of range
    with pytest.raises(AnalysisError):
        smoothness(data, 0, 2)  # extent too small


# ------------------------------------------------------------ autocorrelation

def direct_autocorr(x, tau):
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    var = ((x - mu) ** 2).mean()
    return float(((x[:len(x) - tau] - mu) * (x[tau:] - mu)).sum() / len(x) / var)


def test_autocorrelation_lag0_is_one(rng):
    ac = autocorrelation(mem_dataset(rng.normal(size=500)), 10)
    assert ac.coefficients[0] == 1.0


def test_autocorrelation_alternating():
    data = mem_dataset(np.tile([1.0, -1.0], 500))
    ac = autocorrelation(data, 3)
    assert ac.coefficients[1] == pytest.approx(-1.0, abs=2 / 1000)
    assert ac.coefficients[1] == pytest.approx(direct_autocorr(data.values, 1), abs=1e-12)


def test_autocorrelation_matches_direct_formula(rng):
    values = rng.normal(size=777)
    ac = autocorrelation(mem_dataset(values), 20)
    for tau in (1, 5, 20):
        assert ac.coefficients[tau] == pytest.approx(direct_autocorr(values, tau),
                                                     abs=1e-12)


def test_autocorrelation_white_noise_band():
    n = 10**4
    noise = np.random.default_rng(7).normal(size=n)
    ac = autocorrelation(mem_dataset(noise), 100)
    assert np.all(np.abs(ac.coefficients[1:]) < 3 / math.sqrt(n))


def test_autocorrelation_bounded(rng):
    ac = autocorrelation(mem_dataset(rng.uniform(0, 1, 400)), 50)
    assert np.all(np.abs(ac.coefficients) <= 1 + 1e-12)


def test_autocorrelation_affine_invariance(rng):
    values = rng.normal(size=600)
    a = autocorrelation(mem_dataset(values), 30)
    b = autocorrelation(mem_dataset(2.5 * values - 7.0), 30)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-10)


def test_autocorrelation_constant_rejected():
    with pytest.raises(AnalysisError, match="undefined"):
        autocorrelation(mem_dataset([5.0] * 100), 10)


# ------------------------------------------------------------------------ PCA

def jacobi_eigenvalues(A, sweeps=100, tol=1e-14):
    """Independent cyclic Jacobi eigensolver for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(max(0.0, np.sum(A**2) - np.sum(np.diag(A) ** 2)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + math.sqrt(theta**2 + 1))
                if theta == 0:
                    t = 1.0
                c = 1 / math.sqrt(t**2 + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


def test_pca_identical_rows_degenerate(rng):
    row = rng.normal(size=12)
    data = mem_dataset(np.tile(row, (6, 1)), dims=(6, 12))
    p = pca_summary(data)
    assert p.degenerate
    assert p.explained_variance_ratio.tolist() == [1.0]


def test_pca_rank_one():
    base = np.arange(1.0, 9.0)
    rows = np.outer([1.0, 2.0, 3.0, 4.0], base)
    p = pca_summary(mem_dataset(rows, dims=(4, 8)))
    assert p.explained_variance_ratio[0] >= 1 - 1e-9


def test_pca_matches_jacobi_oracle(rng):
    matrix = rng.normal(size=(10, 20))
    data = mem_dataset(matrix, dims=(10, 20))
    p = pca_summary(data)
    centered = matrix - matrix.mean(axis=0)
    eigs = jacobi_eigenvalues(centered.T @ centered)
    eigs = np.clip(eigs, 0, None)
    expect = eigs[:10] / eigs.sum()
    np.testing.assert_allclose(p.explained_variance_ratio[:10], expect[:10],
                               atol=1e-8)
    assert abs(p.explained_variance_ratio.sum() - 1.0) < 1e-9
    assert np.all(np.diff(p.singular_values) <= 1e-12)


def test_pca_row_permutation_invariant(rng):
    matrix = rng.normal(size=(9, 5))
    a = pca_summary(mem_dataset(matrix, dims=(9, 5)))
    b = pca_summary(mem_dataset(matrix[rng.permutation(9)], dims=(9, 5)))
    np.testing.assert_allclose(a.explained_variance_ratio,
                               b.explained_variance_ratio, atol=1e-10)


def test_pca_rejects_1d():
    with pytest.raises(AnalysisError):
        pca_summary(mem_dataset(np.arange(10.0)))


# ------------------------------------------------------------ full report

def test_analyze_properties_full(rng):
    data = mem_dataset(rng.uniform(0, 1, (16, 16)), dims=(16, 16))
    report = analyze_properties(data, bins=32, max_lag=20,
                                entropy_eb_abs=0.05, block_dims=(8, 8))
    assert report.entropy_map is not None and report.entropy_map.values.size == 4
    assert report.autocorrelation is not None
    assert report.pca is not None
    assert report.psd.size == 256
    assert len(report.smoothness) == 4  # 2 axes x 2 orders


def test_analyze_properties_constant_degrades_gracefully():
    report = analyze_properties(mem_dataset([1.0] * 64, dims=(64,)), bins=8,
                                max_lag=10)
    assert report.autocorrelation is None
    assert report.entropy_bits == 0.0


def test_power_spectrum_parseval(rng):
    values = rng.normal(size=333)
    psd = power_spectrum(mem_dataset(values))
    assert psd.sum() == pytest.approx(float((values**2).sum()), rel=1e-9)
