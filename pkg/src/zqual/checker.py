"""Original-vs-reconstructed assessment: pointwise and statistical errors,
bound checks, size metrics, Pearson correlation, error autocorrelation,
derived-field (divergence/Laplacian) comparisons, and the compression
break-even model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datacore import Dataset, ErrorBoundSpec, PRECISION_BYTES
from .properties import AnalysisError, AutocorrSeries, Histogram, autocorrelation_of, histogram_of

DERIVED_KINDS = ("divergence", "laplacian", "partial1", "partial2")


@dataclass(frozen=True)
class ErrorFields:
    abs_errors: np.ndarray
    rel_errors: np.ndarray | None  # None when the original range is zero
    value_range: float

    @property
    def rel_defined(self) -> bool:
        return self.rel_errors is not None


@dataclass(frozen=True)
class DistortionStats:
    max_abs_err: float
    max_rel_err: float | None
    rmse: float
    nrmse: float | None
    psnr: float | None  # dB; math.inf for zero error, None when range is zero


@dataclass(frozen=True)
class SizeMetrics:
    orig_bytes: int
    comp_bytes: int
    n: int
    cr: float
    br: float  # bits/value


@dataclass(frozen=True)
class BoundCheck:
    max_abs: float
    max_rel: float | None
    satisfied: bool


@dataclass(frozen=True)
class BreakEvenQuery:
    data_bytes: float
    bandwidth: float       # bytes/s
    r_comp: float          # bytes of original data per second
    r_decomp: float
    cr: float

    def __post_init__(self):
        for name in ("data_bytes", "bandwidth", "r_comp", "r_decomp", "cr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class BreakEvenResult:
    beneficial: bool
    time_plain: float
    time_compressed: float


@dataclass(frozen=True)
class DerivedFieldComparison:
    kind: str
    stats: DistortionStats


def _check_shapes(orig: Dataset, recon: Dataset) -> None:
    if orig.descriptor.dims != recon.descriptor.dims:
        raise AnalysisError(
            f"shape mismatch: {orig.descriptor.dims} vs {recon.descriptor.dims}")


def pointwise_errors(orig: Dataset, recon: Dataset) -> ErrorFields:
    _check_shapes(orig, recon)
    abs_errors = orig.values.astype(np.float64) - recon.values.astype(np.float64)
    value_range = float(orig.values.max() - orig.values.min())
    rel_errors = abs_errors / value_range if value_range > 0 else None
    return ErrorFields(abs_errors=abs_errors, rel_errors=rel_errors,
                       value_range=value_range)


def check_bound(errors: ErrorFields, bound: ErrorBoundSpec) -> BoundCheck:
    """Closed-inequality check of max |error| against the bound; the closed
    form avoids false failures when a compressor hits the bound exactly."""
    max_abs = float(np.abs(errors.abs_errors).max())
    max_rel = float(np.abs(errors.rel_errors).max()) if errors.rel_defined else None
    if bound.kind == "absolute":
        satisfied = max_abs <= bound.magnitude
    else:
        if max_rel is None:
            raise AnalysisError("relative bound undefined on zero-range data")
        satisfied = max_rel <= bound.magnitude
    return BoundCheck(max_abs=max_abs, max_rel=max_rel, satisfied=satisfied)


def distortion_from_arrays(orig: np.ndarray, recon: np.ndarray) -> DistortionStats:
    a = np.asarray(orig, dtype=np.float64).ravel()
    b = np.asarray(recon, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise AnalysisError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise AnalysisError("empty field")
    err = a - b
    max_abs = float(np.abs(err).max())
    rmse = float(np.sqrt(np.dot(err, err) / err.size))
    value_range = float(a.max() - a.min())
    if value_range > 0:
        max_rel = max_abs / value_range
        nrmse = rmse / value_range
        psnr = math.inf if nrmse == 0 else -20.0 * math.log10(nrmse)
    else:
        max_rel = nrmse = psnr = None
    return DistortionStats(max_abs_err=max_abs, max_rel_err=max_rel,
                           rmse=rmse, nrmse=nrmse, psnr=psnr)


def distortion_stats(orig: Dataset, recon: Dataset) -> DistortionStats:
    _check_shapes(orig, recon)
    return distortion_from_arrays(orig.values, recon.values)


def error_distribution(errors: ErrorFields, bins: int) -> Histogram:
    return histogram_of(errors.abs_errors, bins)


def size_metrics(orig_bytes: int, comp_bytes: int, n: int, precision: str) -> SizeMetrics:
    if orig_bytes <= 0 or n <= 0:
        raise AnalysisError("orig_bytes and n must be positive")
    if comp_bytes <= 0:
        raise AnalysisError("comp_bytes must be positive")
    if precision not in PRECISION_BYTES:
        raise AnalysisError(f"invalid precision {precision!r}")
    return SizeMetrics(orig_bytes=orig_bytes, comp_bytes=comp_bytes, n=n,
                       cr=orig_bytes / comp_bytes, br=8.0 * comp_bytes / n)


def pearson(orig: Dataset, recon: Dataset) -> float:
    _check_shapes(orig, recon)
    x = orig.values.astype(np.float64)
    y = recon.values.astype(np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx == 0.0 or sy == 0.0:
        raise AnalysisError("Pearson correlation undefined for a constant side")
    return float(np.dot(xc, yc) / math.sqrt(sx * sy))


def error_autocorrelation(errors: ErrorFields, max_lag: int) -> AutocorrSeries:
    return autocorrelation_of(errors.abs_errors, max_lag)


def _require_rank3(grid: np.ndarray, min_extent: int) -> None:
    if grid.ndim != 3:
        raise AnalysisError(f"rank-3 dataset required, got rank {grid.ndim}")
    if any(d < min_extent for d in grid.shape):
        raise AnalysisError(
            f"every dimension must be >= {min_extent}, got {grid.shape}")


def divergence_field(data: Dataset) -> np.ndarray:
    """Sum of backward first differences on the offset interior region
    (conventional sign: 3f(x,y,z) - f(x-1,..) - f(..,y-1,.) - f(..,z-1))."""
    g = data.grid.astype(np.float64)
    _require_rank3(g, 2)
    core = g[1:, 1:, 1:]
    return (3.0 * core
            - g[:-1, 1:, 1:]
            - g[1:, :-1, 1:]
            - g[1:, 1:, :-1])


def laplacian_field(data: Dataset) -> np.ndarray:
    """Standard 7-point Laplacian on interior points."""
    g = data.grid.astype(np.float64)
    _require_rank3(g, 3)
    core = g[1:-1, 1:-1, 1:-1]
    return (g[:-2, 1:-1, 1:-1] + g[2:, 1:-1, 1:-1]
            + g[1:-1, :-2, 1:-1] + g[1:-1, 2:, 1:-1]
            + g[1:-1, 1:-1, :-2] + g[1:-1, 1:-1, 2:]
            - 6.0 * core)


def _derived_field(data: Dataset, kind: str, axis: int, order: int) -> np.ndarray:
    from .properties import smoothness

    if kind == "divergence":
        return divergence_field(data)
    if kind == "laplacian":
        return laplacian_field(data)
    if kind == "partial1":
        return smoothness(data, axis, 1).field
    if kind == "partial2":
        return smoothness(data, axis, order=2).field
    raise AnalysisError(f"unknown derived-field kind {kind!r}")


def compare_derived(orig: Dataset, recon: Dataset, kind: str,
                    axis: int = 0) -> DerivedFieldComparison:
    """Distortion between derived fields of original and reconstruction;
    range for normalization is taken from the original's derived field."""
    if kind not in DERIVED_KINDS:
        raise AnalysisError(f"unknown derived-field kind {kind!r}")
    _check_shapes(orig, recon)
    order = 2 if kind == "partial2" else 1
    f_orig = _derived_field(orig, kind, axis, order)
    f_recon = _derived_field(recon, kind, axis, order)
    return DerivedFieldComparison(kind=kind,
                                  stats=distortion_from_arrays(f_orig, f_recon))


def break_even(q: BreakEvenQuery) -> BreakEvenResult:
    """Does compressing before transfer save total time? Equivalent to
    BW / R_overall < (CR - 1) / CR with
    R_overall = r_comp * r_decomp / (r_comp + r_decomp)."""
    time_plain = q.data_bytes / q.bandwidth
    time_compressed = (q.data_bytes / (q.cr * q.bandwidth)
                       + q.data_bytes / q.r_comp
                       + q.data_bytes / q.r_decomp)
    r_overall = q.r_comp * q.r_decomp / (q.r_comp + q.r_decomp)
    beneficial = q.bandwidth / r_overall < (q.cr - 1.0) / q.cr
    return BreakEvenResult(beneficial=beneficial, time_plain=time_plain,
                           time_compressed=time_compressed)
