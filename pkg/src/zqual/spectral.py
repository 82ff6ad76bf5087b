"""Frequency-domain analysis: DFT amplitudes/phases, power spectral
density, single-level orthonormal Haar DWT, and original-vs-reconstructed
transform comparisons. Multidimensional inputs are flattened row-major
into one series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SPECTRUM_THRESHOLD = 1e-12


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    amplitudes: np.ndarray  # |X(k)| for k = 0..N-1
    phases: np.ndarray      # arg X(k), radians


@dataclass(frozen=True)
class WaveletDecomposition:
    approx: np.ndarray  # N/2 scaling coefficients
    detail: np.ndarray  # N/2 wavelet coefficients


@dataclass(frozen=True)
class SpectrumDiff:
    bins: np.ndarray         # frequency indices with a reported difference
    differences: np.ndarray  # |A_orig - A_recon| / A_orig per reported bin
    excluded_bins: np.ndarray  # indices where A_orig fell below threshold


def _as_series(x) -> np.ndarray:
    values = getattr(x, "values", x)
    series = np.asarray(values, dtype=np.float64).ravel()
    if series.size == 0:
        raise SpectralError("empty series")
    return series


def dft(series) -> Spectrum:
    """Unnormalized forward transform X(k) = sum_n x(n) e^{-2pi i k n / N}."""
    x = _as_series(series)
    X = np.fft.fft(x)
    return Spectrum(amplitudes=np.abs(X), phases=np.angle(X))


def psd(series) -> np.ndarray:
    """Per-bin power |X(k)|^2 / N; satisfies Parseval: sum = sum x^2."""
    x = _as_series(series)
    return np.abs(np.fft.fft(x)) ** 2 / x.size


def haar_dwt(series) -> WaveletDecomposition:
    """Single-level orthonormal Haar transform of an even-length series."""
    x = _as_series(series)
    if x.size % 2 != 0:
        raise SpectralError(f"Haar DWT requires even length, got {x.size}")
    root2 = np.sqrt(2.0)
    return WaveletDecomposition(approx=(x[0::2] + x[1::2]) / root2,
                                detail=(x[0::2] - x[1::2]) / root2)


def haar_idwt(decomp: WaveletDecomposition) -> np.ndarray:
    root2 = np.sqrt(2.0)
    out = np.empty(2 * decomp.approx.size)
    out[0::2] = (decomp.approx + decomp.detail) / root2
    out[1::2] = (decomp.approx - decomp.detail) / root2
    return out


def compare_spectra(orig, recon, threshold: float = DEFAULT_SPECTRUM_THRESHOLD) -> SpectrumDiff:
    """Per-frequency amplitude differences normalized by the original
    amplitude; bins whose original amplitude is below threshold x max
    amplitude are excluded rather than reported as exploding ratios."""
    a = dft(orig).amplitudes
    b = dft(recon).amplitudes
    if a.size != b.size:
        raise SpectralError(f"length mismatch: {a.size} vs {b.size}")
    cutoff = threshold * a.max()
    included = a >= cutoff
    bins = np.nonzero(included)[0]
    diffs = np.abs(a[included] - b[included]) / a[included]
    return SpectrumDiff(bins=bins, differences=diffs,
                        excluded_bins=np.nonzero(~included)[0])


def wavelet_coefficients(series) -> np.ndarray:
    """Concatenated (approx || detail) single-level Haar coefficients."""
    d = haar_dwt(series)
    return np.concatenate([d.approx, d.detail])


def compare_wavelets(orig, recon):
    """Distortion between the Haar coefficient vectors of original and
    reconstruction (orthonormality makes the coefficient-space rmse equal
    the sample-space rmse)."""
    from .checker import distortion_from_arrays

    a = wavelet_coefficients(orig)
    b = wavelet_coefficients(recon)
    if a.size != b.size:
        raise SpectralError(f"length mismatch: {a.size} vs {b.size}")
    return distortion_from_arrays(a, b)
