"""Property analysis of an original dataset: basic statistics, value
distribution, truncated-symbol entropy (global and per block), smoothness,
autocorrelation, and a PCA summary. The power spectrum delegates to the
spectral module."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datacore import Dataset, ErrorBoundSpec
from . import spectral


class AnalysisError(ValueError):
    """Raised when an analysis is undefined on its input."""


@dataclass(frozen=True)
class BasicStats:
    min: float
    max: float
    avg: float
    range: float


@dataclass(frozen=True)
class Histogram:
    bin_count: int
    edges: np.ndarray   # lower bound of each bin
    pdf: np.ndarray     # per-bin probability, sums to 1
    cdf: np.ndarray     # nondecreasing, last entry 1
    counts: np.ndarray  # raw per-bin counts


@dataclass(frozen=True)
class EntropyMap:
    block_dims: tuple[int, ...]
    grid_shape: tuple[int, ...]  # number of block tiles per axis
    values: np.ndarray           # one entropy (bits) per block, row-major tiles
    bound: ErrorBoundSpec


@dataclass(frozen=True)
class AutocorrSeries:
    lags: np.ndarray          # 0..max_lag
    coefficients: np.ndarray  # in [-1, 1]


@dataclass(frozen=True)
class PcaSummary:
    singular_values: np.ndarray
    explained_variance_ratio: np.ndarray
    degenerate: bool = False  # all-zero matrix after centering


@dataclass(frozen=True)
class SmoothnessSummary:
    axis: int
    order: int
    field: np.ndarray  # derivative field, shrunk along `axis`
    mean_abs: float
    max_abs: float


def _stat_values(data: Dataset) -> np.ndarray:
    v = data.finite_values
    if v.size == 0:
        raise AnalysisError("dataset has no finite values")
    return v


def basic_stats(data: Dataset) -> BasicStats:
    v = _stat_values(data)
    lo = float(v.min())
    hi = float(v.max())
    # double accumulation regardless of storage precision
    avg = float(np.sum(v, dtype=np.float64) / v.size)
    return BasicStats(min=lo, max=hi, avg=avg, range=hi - lo)


def histogram_of(values: np.ndarray, bins: int) -> Histogram:
    """Equal-width histogram over [min, max] with the max value assigned to
    the last bin; degenerate (zero-range) input collapses to a single bin."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise AnalysisError("cannot histogram an empty sequence")
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        counts = np.array([values.size])
        edges = np.array([lo])
    else:
        if bins < 2:
            raise AnalysisError(f"bins must be >= 2, got {bins}")
        counts, all_edges = np.histogram(values, bins=bins, range=(lo, hi))
        edges = all_edges[:-1]
    pdf = counts / values.size
    cdf = np.cumsum(pdf)
    return Histogram(bin_count=len(counts), edges=edges, pdf=pdf, cdf=cdf, counts=counts)


def distribution(data: Dataset, bins: int) -> Histogram:
    return histogram_of(_stat_values(data), bins)


def _entropy_of_values(values: np.ndarray, eb_abs: float) -> float:
    # truncated symbol: eb_abs * floor(x / eb_abs); floor toward -inf
    symbols = np.floor(values.astype(np.float64) / eb_abs)
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / values.size
    return float(-(p * np.log2(p)).sum())


def entropy(data: Dataset, eb_abs: float) -> float:
    """Shannon entropy (bits) of the data quantized to multiples of eb_abs."""
    if not eb_abs > 0:
        raise AnalysisError(f"eb_abs must be > 0, got {eb_abs}")
    return _entropy_of_values(_stat_values(data), eb_abs)


def block_entropy(data: Dataset, eb_abs: float, block_dims) -> EntropyMap:
    """One entropy per block tile; edge blocks may be smaller. Tiles are
    ordered row-major over the tile grid."""
    if not eb_abs > 0:
        raise AnalysisError(f"eb_abs must be > 0, got {eb_abs}")
    dims = data.descriptor.dims
    block_dims = tuple(int(b) for b in block_dims)
    if len(block_dims) != len(dims):
        raise AnalysisError(
            f"block rank {len(block_dims)} != dataset rank {len(dims)}")
    if any(b < 1 for b in block_dims):
        raise AnalysisError(f"block dims must be positive, got {block_dims}")
    if any(b > d for b, d in zip(block_dims, dims)):
        raise AnalysisError(f"block dims {block_dims} exceed dataset dims {dims}")
    grid = data.grid
    tiles_per_axis = tuple(-(-d // b) for d, b in zip(dims, block_dims))
    values = np.empty(math.prod(tiles_per_axis))
    for flat, tile in enumerate(np.ndindex(*tiles_per_axis)):
        sl = tuple(slice(t * b, min((t + 1) * b, d))
                   for t, b, d in zip(tile, block_dims, dims))
        values[flat] = _entropy_of_values(grid[sl].ravel(), eb_abs)
    return EntropyMap(block_dims=block_dims, grid_shape=tiles_per_axis,
                      values=values, bound=ErrorBoundSpec("absolute", eb_abs))


def smoothness(data: Dataset, dim: int, order: int) -> SmoothnessSummary:
    """Partial-derivative field along one axis: forward difference for order
    1, central second difference for order 2."""
    grid = data.grid
    if not 0 <= dim < grid.ndim:
        raise AnalysisError(f"axis {dim} out of range for rank {grid.ndim}")
    if order not in (1, 2):
        raise AnalysisError(f"order must be 1 or 2, got {order}")
    if grid.shape[dim] < order + 1:
        raise AnalysisError(
            f"extent {grid.shape[dim]} along axis {dim} too small for order {order}")
    g = grid.astype(np.float64, copy=False)
    if order == 1:
        field = np.diff(g, axis=dim)
    else:
        field = np.diff(g, n=2, axis=dim)
    abs_field = np.abs(field)
    return SmoothnessSummary(axis=dim, order=order, field=field,
                             mean_abs=float(abs_field.mean()),
                             max_abs=float(abs_field.max()))


def autocorrelation_of(series: np.ndarray, max_lag: int) -> AutocorrSeries:
    """Lag series with full-series population mean/variance and divisor N at
    every lag (keeps |AC| <= 1)."""
    x = np.asarray(series, dtype=np.float64).ravel()
    n = x.size
    if not 1 <= max_lag < n:
        raise AnalysisError(f"max_lag must be in [1, N), got {max_lag} with N={n}")
    mu = x.mean()
    centered = x - mu
    var = float(np.dot(centered, centered)) / n
    if var == 0.0:
        raise AnalysisError("autocorrelation undefined for a constant series")
    coeffs = np.empty(max_lag + 1)
    coeffs[0] = 1.0
    for tau in range(1, max_lag + 1):
        coeffs[tau] = float(np.dot(centered[:-tau], centered[tau:])) / n / var
    return AutocorrSeries(lags=np.arange(max_lag + 1), coefficients=coeffs)


def autocorrelation(data: Dataset, max_lag: int) -> AutocorrSeries:
    return autocorrelation_of(data.values, max_lag)


def pca_summary(data: Dataset) -> PcaSummary:
    """Singular values and explained-variance ratios of the dataset reshaped
    to (first dim) observations x (product of remaining dims) features."""
    if len(data.descriptor.dims) < 2:
        raise AnalysisError("PCA requires a dataset of rank >= 2")
    matrix = data.grid.reshape(data.descriptor.dims[0], -1).astype(np.float64)
    centered = matrix - matrix.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    # rank tolerance: identical rows leave only centering round-off behind
    tol = max(matrix.shape) * np.finfo(np.float64).eps * np.linalg.norm(matrix)
    if s.size == 0 or s[0] <= tol:
        return PcaSummary(singular_values=s,
                          explained_variance_ratio=np.array([1.0]),
                          degenerate=True)
    total = float((s ** 2).sum())
    return PcaSummary(singular_values=s, explained_variance_ratio=s ** 2 / total)


def power_spectrum(data: Dataset) -> np.ndarray:
    """Power spectral density of the flattened series."""
    return spectral.psd(data.values)


@dataclass(frozen=True)
class PropertyReport:
    dataset_id: str
    stats: BasicStats
    histogram: Histogram
    entropy_bits: float
    entropy_eb_abs: float
    entropy_map: EntropyMap | None
    smoothness: tuple[SmoothnessSummary, ...]
    autocorrelation: AutocorrSeries | None
    psd: np.ndarray
    pca: PcaSummary | None


def analyze_properties(data: Dataset, bins: int = 1000, max_lag: int = 100,
                       entropy_eb_abs: float = 1e-3,
                       block_dims=None) -> PropertyReport:
    """Runs the full property battery for one dataset. Analyses that are
    undefined on the input (autocorrelation of a constant series, PCA of a
    1-D dataset) are omitted rather than failing the report."""
    stats = basic_stats(data)
    hist = distribution(data, bins)
    ent = entropy(data, entropy_eb_abs)
    emap = None
    if block_dims is not None and len(block_dims) == len(data.descriptor.dims):
        emap = block_entropy(data, entropy_eb_abs, block_dims)
    smooth = []
    for axis, extent in enumerate(data.descriptor.dims):
        for order in (1, 2):
            if extent >= order + 1:
                smooth.append(smoothness(data, axis, order))
    try:
        ac = autocorrelation(data, min(max_lag, data.values.size - 1))
    except AnalysisError:
        ac = None
    psd_values = power_spectrum(data)
    pca = pca_summary(data) if len(data.descriptor.dims) >= 2 else None
    return PropertyReport(dataset_id=data.descriptor.id, stats=stats,
                          histogram=hist, entropy_bits=ent,
                          entropy_eb_abs=entropy_eb_abs, entropy_map=emap,
                          smoothness=tuple(smooth), autocorrelation=ac,
                          psd=psd_values, pca=pca)
