"""Spectral estimation and the cost-shaping filter designs.

Spectra follow the convention var(x) = (1/2pi) * integral of Phi_x over
[-pi, pi], so white noise of variance s^2 has a flat spectrum at s^2.

The four magnitude designs reshape the identification cost so its
minimizer approximates the disturbance-response minimizer when the
controller structure cannot represent the ideal controller.  All four
costs depend on the filter only through |K(w)|^2, so the filter is
applied as a magnitude-only zero-phase operation in the DFT domain;
phase is irrelevant offline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.fft import irfft, rfft

from . import lti
from .errors import DimensionMismatch, GridMismatch, TooFewSamples

PE_LIN = "pe_lin"
PE_NLIN = "pe_nlin"
CORR_LIN = "corr_lin"
CORR_NLIN = "corr_nlin"

SPECTRUM_FLOOR_REL = 1e-12
FILTER_CAP_REL = 1e6
ENERGY_MASK_REL = 1e-3


@dataclass(frozen=True)
class SpectralEstimate:
    """Values on a uniform frequency grid over [0, pi] (rad/sample)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.grid) < 2 or len(self.grid) != len(self.values):
            raise GridMismatch("grid and values must match, with at least 2 points")


@dataclass(frozen=True)
class FilterMagnitude:
    grid: np.ndarray
    mag: np.ndarray

    def __post_init__(self):
        if len(self.grid) != len(self.mag):
            raise GridMismatch("grid and mag must have equal length")
        if not np.all(np.isfinite(self.mag)) or np.any(self.mag < 0):
            raise ValueError("filter magnitude must be finite and nonnegative")


def _welch(x, y, segment, overlap):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise DimensionMismatch("series lengths differ")
    if segment > len(x):
        raise TooFewSamples("segment longer than the series")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must be in [0, 1)")
    noverlap = int(round(overlap * segment))
    f, p = sps.csd(
        x,
        y,
        fs=1.0,
        window="hann",
        nperseg=segment,
        noverlap=noverlap,
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    # One-sided density doubles interior bins; undo it so values are the
    # two-sided spectrum in rad/sample convention.
    p = p.copy()
    p[1:-1] /= 2.0
    return 2.0 * np.pi * f, p


def welch_psd(x, segment: int = 512, overlap: float = 0.5) -> SpectralEstimate:
    """Averaged Hann-windowed periodogram of x."""
    grid, p = _welch(x, x, segment, overlap)
    return SpectralEstimate(grid=grid, values=np.maximum(p.real, 0.0))


def cross_psd(x, y, segment: int = 512, overlap: float = 0.5) -> SpectralEstimate:
    """Welch cross-spectrum of (x, y); complex-valued on the same grid."""
    grid, p = _welch(x, y, segment, overlap)
    return SpectralEstimate(grid=grid, values=p)


def record_psd(x) -> SpectralEstimate:
    """Finite-record spectrum |DFT(x)|^2 / N on the record's own DFT grid.

    No windowing or averaging; lines of a periodic record that spans an
    integer number of periods land exactly on grid points.  This is the
    estimate the filter designs consume, because the designed magnitude
    is later applied on exactly this grid.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 4:
        raise TooFewSamples("record too short for a spectrum")
    n = len(x)
    grid = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    values = np.abs(rfft(x)) ** 2 / n
    return SpectralEstimate(grid=grid, values=values)


def record_csd(x, y) -> SpectralEstimate:
    """Finite-record cross-spectrum DFT(x) * conj(DFT(y)) / N (complex)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise DimensionMismatch("series lengths differ")
    if len(x) < 4:
        raise TooFewSamples("record too short for a spectrum")
    n = len(x)
    grid = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    values = rfft(x) * np.conj(rfft(y)) / n
    return SpectralEstimate(grid=grid, values=values)


def disturbance_psd(d, grid) -> SpectralEstimate:
    """Finite-horizon energy spectrum |DFT(d)|^2 / N evaluated on the grid.

    Deterministic disturbances like a step are not quasi-stationary, so
    the finite-signal transform (the zero-padded DFT, i.e. the DTFT of
    the windowed signal, evaluated at the grid frequencies) is used
    instead of an averaged estimate.
    """
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        raise ValueError("disturbance series is empty")
    grid = np.asarray(grid, dtype=float)
    n = len(d)
    dtft = np.exp(-1j * np.outer(grid, np.arange(n))) @ d
    return SpectralEstimate(grid=grid, values=np.abs(dtft) ** 2 / n)


def _require_common_grid(*estimates):
    g0 = estimates[0].grid
    for e in estimates[1:]:
        if len(e.grid) != len(g0) or not np.allclose(e.grid, g0):
            raise GridMismatch("spectral estimates are on different grids")
    return g0


def design_filter(
    kind: str,
    Qd: lti.TransferOperator,
    a_current,
    phi_d: SpectralEstimate,
    phi_den: SpectralEstimate,
) -> FilterMagnitude:
    """Evaluate one of the four approximate |K(w)|^2 designs.

    ``phi_den`` is the data-dependent denominator spectrum: the output
    spectrum for the error-norm designs, the (complex) excitation/output
    cross-spectrum for the correlation designs.  ``a_current`` is the
    current denominator polynomial of the identified controller part and
    enters only the *_lin designs.
    """
    grid = _require_common_grid(phi_d, phi_den)
    qd_mag2 = np.abs(lti.frequency_response(Qd, grid)) ** 2

    if kind in (PE_LIN, PE_NLIN):
        den = np.maximum(phi_den.values.real, 0.0)
    elif kind in (CORR_LIN, CORR_NLIN):
        den = np.abs(phi_den.values) ** 2
    else:
        raise ValueError(f"unknown filter kind {kind!r}")

    if kind in (PE_LIN, CORR_LIN):
        a = np.asarray(a_current, dtype=float)
        if a[0] != 1.0:
            raise ValueError("controller denominator must have leading coefficient 1")
        a_mag2 = np.abs(np.polyval(a[::-1], np.exp(-1j * grid))) ** 2
        den = den * a_mag2

    num = qd_mag2**2 * phi_d.values
    dmax = np.max(den)
    if dmax <= 0:
        raise ValueError("denominator spectrum is identically zero")
    # The design ratio is only informative where the data carries energy.
    # Elsewhere (deep valleys of a line spectrum, near-zero noise bins)
    # dividing by the raw estimate amplifies whatever leaked there, so the
    # ratio at low-energy bins is bridged by interpolation from the
    # energetic bins, and never allowed above the raw floored ratio (which
    # keeps the structural zeros of Qd, e.g. at DC, exactly in place).
    raw = num / np.maximum(den, SPECTRUM_FLOOR_REL * dmax)
    energetic = den >= ENERGY_MASK_REL * dmax
    bridged = np.interp(grid, grid[energetic], raw[energetic])
    k2 = np.minimum(raw, bridged)
    cap = FILTER_CAP_REL * max(np.median(k2), np.finfo(float).tiny)
    k2 = np.minimum(k2, cap)
    return FilterMagnitude(grid=grid, mag=np.sqrt(k2))


def apply_zero_phase(K: FilterMagnitude, x) -> np.ndarray:
    """Multiply the DFT magnitude of x by K's magnitude, bin by bin.

    Circular (no padding): the output has exactly the input's length and
    Parseval holds bin for bin.  Filtering and any lagging of the result
    must share this circular convention; the estimators that consume
    designed filters do.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    freqs = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    mag = np.interp(freqs, K.grid, K.mag)
    return irfft(rfft(x) * mag, n)
