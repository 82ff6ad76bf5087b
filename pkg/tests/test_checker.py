import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zqual import checker
from zqual.checker import (
    BreakEvenQuery,
    break_even,
    check_bound,
    compare_derived,
    distortion_stats,
    divergence_field,
    error_autocorrelation,
    error_distribution,
    laplacian_field,
    pearson,
    pointwise_errors,
    size_metrics,
)
from zqual.datacore import ErrorBoundSpec
from zqual.properties import AnalysisError
from conftest import mem_dataset


# ------------------------------------------------------------ pointwise errors

def test_pointwise_identity():
    data = mem_dataset([1.0, 2.0, 3.0])
    errs = pointwise_errors(data, data)
    assert np.all(errs.abs_errors == 0.0)


def test_pointwise_hand_values():
    orig = mem_dataset([0.0, 2.0])
    recon = mem_dataset([0.5, 1.5])
    errs = pointwise_errors(orig, recon)
    assert errs.abs_errors.tolist() == [-0.5, 0.5]
    assert errs.rel_errors.tolist() == [-0.25, 0.25]  # R_X = 2


def test_pointwise_zero_range_flags_rel():
    errs = pointwise_errors(mem_dataset([3.0, 3.0]), mem_dataset([2.9, 3.1]))
    assert not errs.rel_defined and errs.rel_errors is None


def test_pointwise_shape_mismatch():
    with pytest.raises(AnalysisError, match="mismatch"):
        pointwise_errors(mem_dataset([1.0, 2.0]), mem_dataset([1.0, 2.0, 3.0]))


# ----------------------------------------------------------------- check_bound

def test_check_bound_zero_errors():
    data = mem_dataset([0.0, 1.0])
    errs = pointwise_errors(data, data)
    for kind in ("absolute", "value_range_relative"):
        assert check_bound(errs, ErrorBoundSpec(kind, 1e-9)).satisfied


def test_check_bound_closed_inequality():
    errs = pointwise_errors(mem_dataset([0.0, 1.0]), mem_dataset([0.0, 0.9]))
    chk = check_bound(errs, ErrorBoundSpec("absolute", errs.abs_errors.max()))
    assert chk.satisfied  # error exactly at the bound still passes


def test_check_bound_violation():
    errs = pointwise_errors(mem_dataset([0.0, 1.0]), mem_dataset([0.0, 0.5]))
    assert not check_bound(errs, ErrorBoundSpec("absolute", 0.4)).satisfied


def test_check_bound_rel_on_zero_range_rejected():
    errs = pointwise_errors(mem_dataset([1.0, 1.0]), mem_dataset([0.9, 1.1]))
    with pytest.raises(AnalysisError):
        check_bound(errs, ErrorBoundSpec("value_range_relative", 1e-3))


# ------------------------------------------------------------- distortion stats

def test_distortion_lossless():
    data = mem_dataset([1.0, 2.0, 3.0])
    s = distortion_stats(data, data)
    assert s.rmse == 0.0 and s.psnr == math.inf


def test_distortion_analytic_60db():
    # constructed nrmse = 1e-3 -> psnr 60 dB
    orig = mem_dataset([0.0, 1.0])
    recon = mem_dataset([1e-3, 1.0 + 1e-3])
    s = distortion_stats(orig, recon)
    assert s.nrmse == pytest.approx(1e-3, rel=1e-12)
    assert s.psnr == pytest.approx(60.0, abs=1e-9)


def test_distortion_hand_values():
    s = distortion_stats(mem_dataset([0.0, 1.0]), mem_dataset([0.1, 0.9]))
    assert s.rmse == pytest.approx(0.1, rel=1e-12)
    assert s.nrmse == pytest.approx(0.1, rel=1e-12)
    assert s.psnr == pytest.approx(20.0, abs=1e-9)


def test_distortion_zero_range_undefined():
    s = distortion_stats(mem_dataset([2.0, 2.0]), mem_dataset([1.9, 2.1]))
    assert s.nrmse is None and s.psnr is None and s.max_rel_err is None
    assert s.rmse == pytest.approx(0.1, rel=1e-12)


def test_distortion_psnr_decreases_with_noise(rng):
    base = rng.uniform(0, 1, 4000)
    psnrs = []
    for amp in (1e-4, 1e-3, 1e-2):
        noise = rng.uniform(-amp, amp, base.size)
        psnrs.append(distortion_stats(mem_dataset(base),
                                      mem_dataset(base + noise)).psnr)
    assert psnrs[0] > psnrs[1] > psnrs[2]


# ----------------------------------------------------------- error distribution

def test_error_distribution_zero_errors():
    data = mem_dataset([1.0, 2.0])
    h = error_distribution(pointwise_errors(data, data), 20)
    assert h.pdf.tolist() == [1.0]


def test_error_distribution_uniform(rng):
    n = 10**5
    base = rng.uniform(0, 1, n)
    noise = rng.uniform(-1e-3, 1e-3, n)
    h = error_distribution(pointwise_errors(mem_dataset(base),
                                            mem_dataset(base + noise)), 20)
    assert np.all(np.abs(h.pdf - 0.05) < 0.01)


def test_error_distribution_gaussian_center_heavy(rng):
    n = 10**5
    base = rng.uniform(0, 1, n)
    noise = rng.normal(0, 1e-3, n)
    h = error_distribution(pointwise_errors(mem_dataset(base),
                                            mem_dataset(base + noise)), 21)
    center = h.pdf[8:13].min()
    tails = max(h.pdf[:3].max(), h.pdf[-3:].max())
    assert center > tails


# ------------------------------------------------------------------ size metrics

def test_size_metrics_cr_br_product_identity():
    m = size_metrics(4000, 1000, 1000, "single")
    assert m.cr == 4.0 and m.br == 8.0
    assert m.cr * m.br == 32.0


def test_size_metrics_identity_compressor():
    m = size_metrics(4000, 4000, 1000, "single")
    assert m.cr == 1.0 and m.br == 32.0


def test_size_metrics_double():
    m = size_metrics(8000, 2000, 1000, "double")
    assert m.cr == 4.0 and m.br == 16.0 and m.cr * m.br == 64.0


def test_size_metrics_zero_comp_rejected():
    with pytest.raises(AnalysisError):
        size_metrics(4000, 0, 1000, "single")


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 10**7), comp=st.integers(1, 10**8),
       precision=st.sampled_from(["single", "double"]))
def test_size_metrics_cr_br_identity(n, comp, precision):
    vb = 4 if precision == "single" else 8
    m = size_metrics(n * vb, comp, n, precision)
    assert m.cr * m.br == pytest.approx(8 * vb, rel=1e-12)


# ---------------------------------------------------------------------- pearson

def test_pearson_identity(rng):
    data = mem_dataset(rng.normal(size=300))
    assert pearson(data, data) == pytest.approx(1.0, abs=1e-12)


def test_pearson_negation(rng):
    values = rng.normal(size=300)
    assert pearson(mem_dataset(values), mem_dataset(-values)) == pytest.approx(
        -1.0, abs=1e-12)


def test_pearson_affine(rng):
    values = rng.normal(size=300)
    assert pearson(mem_dataset(values),
                   mem_dataset(2 * values + 3)) == pytest.approx(1.0, abs=1e-10)
    assert pearson(mem_dataset(values),
                   mem_dataset(-0.5 * values + 1)) == pytest.approx(-1.0, abs=1e-10)


def test_pearson_constant_rejected(rng):
    with pytest.raises(AnalysisError):
        pearson(mem_dataset([1.0] * 10), mem_dataset(rng.normal(size=10)))


# ------------------------------------------------------- error autocorrelation

def test_error_ac_lag0():
    errs = pointwise_errors(mem_dataset(np.arange(100.0)),
                            mem_dataset(np.arange(100.0) + np.tile([0.1, -0.1], 50)))
    ac = error_autocorrelation(errs, 10)
    assert ac.coefficients[0] == 1.0


def test_error_ac_periodic_pattern():
    n = 1000
    base = np.zeros(n)
    pattern = np.tile([0.1, -0.1], n // 2)  # period 2
    errs = pointwise_errors(mem_dataset(base + pattern), mem_dataset(base))
    ac = error_autocorrelation(errs, 4)
    assert ac.coefficients[2] == pytest.approx(1.0, abs=5 / n)


def test_error_ac_white_noise_band():
    n = 10**4
    noise = np.random.default_rng(7).normal(size=n)
    errs = pointwise_errors(mem_dataset(noise), mem_dataset(np.zeros(n)))
    ac = error_autocorrelation(errs, 100)
    assert np.all(np.abs(ac.coefficients[1:]) < 3 / math.sqrt(n))


# ----------------------------------------------------------------- derivatives

def coords(n):
    x, y, z = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                          np.arange(n, dtype=float), indexing="ij")
    return x, y, z


def test_divergence_constant_zero():
    data = mem_dataset(np.full((4, 4, 4), 2.5), dims=(4, 4, 4))
    assert np.all(divergence_field(data) == 0.0)


def test_divergence_linear_field():
    x, y, z = coords(6)
    data = mem_dataset(x + y + z, dims=(6, 6, 6))
    field = divergence_field(data)
    assert field.shape == (5, 5, 5)
    assert np.all(field == 3.0)


def test_divergence_single_axis():
    x, _, _ = coords(5)
    assert np.all(divergence_field(mem_dataset(x, dims=(5, 5, 5))) == 1.0)


def test_laplacian_harmonic_zero():
    x, y, z = coords(6)
    data = mem_dataset(x + y + z, dims=(6, 6, 6))
    assert np.all(laplacian_field(data) == 0.0)


def test_laplacian_quadratic_exact():
    x, y, z = coords(16)
    data = mem_dataset(x * x + y * y + z * z, dims=(16, 16, 16))
    field = laplacian_field(data)
    assert field.shape == (14, 14, 14)
    assert np.all(field == 6.0)


def test_laplacian_constant_shift_bit_identical(rng):
    values = rng.integers(-50, 50, size=(8, 8, 8)).astype(float)
    a = laplacian_field(mem_dataset(values, dims=(8, 8, 8)))
    b = laplacian_field(mem_dataset(values + 37.0, dims=(8, 8, 8)))
    np.testing.assert_array_equal(a, b)


def test_derivative_rank_checks():
    with pytest.raises(AnalysisError, match="rank-3"):
        divergence_field(mem_dataset(np.zeros((4, 4)), dims=(4, 4)))
    with pytest.raises(AnalysisError, match=">= 3"):
        laplacian_field(mem_dataset(np.zeros((2, 4, 4)), dims=(2, 4, 4)))


def test_compare_derived_identity(rng):
    values = rng.uniform(0, 1, (6, 6, 6))
    data = mem_dataset(values, dims=(6, 6, 6))
    for kind in ("divergence", "laplacian", "partial1", "partial2"):
        cmp = compare_derived(data, data, kind)
        assert cmp.stats.rmse == 0.0


def test_compare_derived_constant_offset_exact_zero(rng):
    values = rng.integers(0, 100, size=(6, 6, 6)).astype(float)
    orig = mem_dataset(values, dims=(6, 6, 6))
    recon = mem_dataset(values + 8.0, dims=(6, 6, 6))
    assert compare_derived(orig, recon, "divergence").stats.rmse == 0.0
    assert compare_derived(orig, recon, "laplacian").stats.rmse == 0.0


def test_compare_derived_noise_amplification(rng):
    # equal-RMSE white noise hurts the Laplacian far more than a smooth bump
    n = 16
    x, y, z = coords(n)
    base = np.sin(x / 4) + np.cos(y / 5) + z / 8
    smooth = 1e-2 * np.sin(x / 8) * np.cos(y / 8)
    smooth_rmse = math.sqrt((smooth**2).mean())
    noise = rng.normal(size=(n, n, n))
    noise *= smooth_rmse / math.sqrt((noise**2).mean())
    orig = mem_dataset(base, dims=(n, n, n))
    rec_smooth = mem_dataset(base + smooth, dims=(n, n, n))
    rec_noise = mem_dataset(base + noise, dims=(n, n, n))
    assert (distortion_stats(orig, rec_noise).rmse
            == pytest.approx(distortion_stats(orig, rec_smooth).rmse, rel=1e-6))
    lap_noise = compare_derived(orig, rec_noise, "laplacian").stats.rmse
    lap_smooth = compare_derived(orig, rec_smooth, "laplacian").stats.rmse
    assert lap_noise > lap_smooth


# ------------------------------------------------------------------- break-even

def test_break_even_boundary_not_beneficial():
    r = break_even(BreakEvenQuery(data_bytes=1e6, bandwidth=1.0, r_comp=4.0,
                                  r_decomp=4.0, cr=2.0))
    assert not r.beneficial
    assert r.time_plain == pytest.approx(r.time_compressed, rel=1e-12)


def test_break_even_beneficial_case():
    r = break_even(BreakEvenQuery(data_bytes=1e6, bandwidth=1.0, r_comp=4.0,
                                  r_decomp=4.0, cr=4.0))
    assert r.beneficial
    assert r.time_compressed < r.time_plain


def test_break_even_cr_one_never_beneficial(rng):
    for _ in range(20):
        bw, rc, rd = rng.uniform(0.1, 100, 3)
        r = break_even(BreakEvenQuery(data_bytes=1.0, bandwidth=bw, r_comp=rc,
                                      r_decomp=rd, cr=1.0))
        assert not r.beneficial


def test_break_even_equals_time_comparison(rng):
    for _ in range(1000):
        d, bw, rc, rd, cr = np.exp(rng.uniform(-3, 8, 5))
        r = break_even(BreakEvenQuery(data_bytes=d, bandwidth=bw, r_comp=rc,
                                      r_decomp=rd, cr=cr))
        assert r.beneficial == (r.time_compressed < r.time_plain)


def test_break_even_rejects_nonpositive():
    with pytest.raises(ValueError):
        BreakEvenQuery(data_bytes=0, bandwidth=1, r_comp=1, r_decomp=1, cr=2)
