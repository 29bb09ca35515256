"""Spectral estimation and filter design tests."""

import numpy as np
import pytest
from scipy.fft import rfft

from loadtune import (
    apply_zero_phase,
    cross_psd,
    design_filter,
    disturbance_psd,
    record_csd,
    record_psd,
    welch_psd,
)
from loadtune.errors import DimensionMismatch, GridMismatch, TooFewSamples
from loadtune.spectra import CORR_LIN, FilterMagnitude, PE_LIN, PE_NLIN, SpectralEstimate


def _record_energy(est, n):
    # Reassemble sum |X_k|^2 / N over the full (two-sided) DFT grid.
    v = est.values.copy()
    interior = v[1:-1] if n % 2 == 0 else v[1:]
    return v[0] + (v[-1] if n % 2 == 0 else 0.0) + 2.0 * np.sum(interior)


def test_record_psd_parseval():
    rng = np.random.default_rng(0)
    x = rng.normal(size=257)
    est = record_psd(x)
    assert _record_energy(est, len(x)) == pytest.approx(np.sum(x**2), rel=1e-10)


def test_record_csd_reduces_to_psd():
    rng = np.random.default_rng(1)
    x = rng.normal(size=128)
    psd = record_psd(x)
    csd = record_csd(x, x)
    assert np.allclose(csd.values.real, psd.values, atol=1e-10)
    assert np.allclose(csd.values.imag, 0.0, atol=1e-10)


def test_record_estimates_validate():
    with pytest.raises(TooFewSamples):
        record_psd([1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        record_csd(np.zeros(8), np.zeros(9))


def test_welch_psd_white_noise_level():
    rng = np.random.default_rng(2)
    x = rng.normal(0.0, 0.5, 200000)
    est = welch_psd(x, segment=512)
    # Flat spectrum at the variance in the rad/sample convention.
    assert np.mean(est.values) == pytest.approx(0.25, rel=0.05)


def test_cross_psd_of_identical_series_is_real():
    rng = np.random.default_rng(3)
    x = rng.normal(size=4096)
    est = cross_psd(x, x)
    assert np.max(np.abs(est.values.imag)) < 1e-12


def test_disturbance_psd_matches_padded_dft():
    d = np.ones(150)
    n_grid = 3000
    grid = 2.0 * np.pi * np.arange(n_grid // 2 + 1) / n_grid
    est = disturbance_psd(d, grid)
    padded = np.zeros(n_grid)
    padded[:150] = d
    oracle = np.abs(rfft(padded)) ** 2 / 150
    assert np.allclose(est.values, oracle, rtol=1e-8, atol=1e-8)
    assert est.values[0] == pytest.approx(150.0)


def test_design_filter_validates(reference_model):
    grid = np.linspace(0.0, np.pi, 64)
    phi = SpectralEstimate(grid=grid, values=np.ones(64))
    other = SpectralEstimate(grid=grid[:32], values=np.ones(32))
    with pytest.raises(GridMismatch):
        design_filter(PE_LIN, reference_model, [1.0], phi, other)
    with pytest.raises(ValueError):
        design_filter("bogus", reference_model, [1.0], phi, phi)
    with pytest.raises(ValueError):
        design_filter(PE_LIN, reference_model, [2.0, 0.5], phi, phi)


def test_design_filter_keeps_reference_model_dc_zero(reference_model):
    # Qd vanishes at DC, so every design must too.
    grid = 2.0 * np.pi * np.arange(1501) / 3000
    phi_d = disturbance_psd(np.ones(150), grid)
    phi_y = SpectralEstimate(grid=grid, values=np.ones(1501))
    for kind in (PE_LIN, PE_NLIN, CORR_LIN):
        K = design_filter(kind, reference_model, [1.0, -0.5], phi_d, phi_y)
        assert K.mag[0] < 1e-10
        assert np.all(np.isfinite(K.mag))


def test_apply_zero_phase_identity_and_parseval():
    rng = np.random.default_rng(4)
    x = rng.normal(size=300)
    grid = 2.0 * np.pi * np.arange(151) / 300
    unit = FilterMagnitude(grid=grid, mag=np.ones(151))
    assert np.allclose(apply_zero_phase(unit, x), x, atol=1e-12)

    mag = 1.0 / (1.0 + grid)
    K = FilterMagnitude(grid=grid, mag=mag)
    y = apply_zero_phase(K, x)
    assert len(y) == len(x)
    # Energy must match the frequency-domain product within 1%.
    expected = np.sum(np.abs(mag * rfft(x)) ** 2)
    interior = slice(1, -1)
    Y = rfft(y)
    got = np.sum(np.abs(Y) ** 2)
    assert got == pytest.approx(expected, rel=0.01)


def test_filter_magnitude_validates():
    with pytest.raises(GridMismatch):
        FilterMagnitude(grid=np.zeros(3), mag=np.zeros(2))
    with pytest.raises(ValueError):
        FilterMagnitude(grid=np.zeros(2), mag=np.array([1.0, -1.0]))
