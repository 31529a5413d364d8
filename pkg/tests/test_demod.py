import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pmadc.demod import (CarrierError, ConditionError, DemodError, analytic_pm, carrier_multiple,
                         carson_bandwidth, dht, dpd_asin, dpd_asin_jitter, dpd_hilbert, lowpass_ideal,
                         rescale_bound)
from pmadc.frontend import NoiseSpec, PmConfig, SampleStream, add_noise, carrier_phase, pm_modulate
from pmadc.metrics import nmse_db
from pmadc.signals import SamplingGrid, SincSeries, Sinusoid, amplitude_bound, gen_sinc_series

T = 0.5e-3
WM = math.pi / T


def grid_for(of=1.0, margin=4, multiple=1):
    half = (4 + margin) * T
    return SamplingGrid.covering(-half, half, T / of, multiple)


# --- asin ---------------------------------------------------------------


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_asin_round_trip_exact(seed, k):
    f = gen_sinc_series(seed, normalize=False)
    c = amplitude_bound(f)
    grid = grid_for()
    pm = PmConfig(k * grid.rate, math.pi / (2 * c), 0.1)
    rep = dpd_asin(pm_modulate(f, pm, grid), pm)
    assert rep.clamp_count == 0
    assert np.max(np.abs(rep.values - f(grid.times))) <= 1e-9 * c


@pytest.mark.parametrize("of", [1, 2, 4])
def test_asin_is_rate_invariant(of):
    f = gen_sinc_series(12)
    grid = grid_for(of)
    pm = PmConfig(0.0, math.pi / 2, 0.1)
    rep = dpd_asin(pm_modulate(f, pm, grid), pm)
    assert np.max(np.abs(rep.values - f(grid.times))) <= 1e-9


def test_asin_zero_stream():
    grid = grid_for()
    rep = dpd_asin(SampleStream(grid, np.zeros(len(grid)), "pm", 0.1), PmConfig(0.0, 1.0, 0.1))
    assert np.all(rep.values == 0)


def test_asin_rejects_off_lattice_carrier():
    grid = grid_for()
    pm = PmConfig(0.37 * grid.rate, 1.0, 0.1)
    with pytest.raises(CarrierError):
        dpd_asin(pm_modulate(gen_sinc_series(0), pm, grid), pm)


def test_asin_warns_when_index_too_large():
    grid = grid_for()
    pm = PmConfig(0.0, 2.0, 0.1)
    with pytest.warns(UserWarning, match="exceeds pi/2"):
        dpd_asin(pm_modulate(gen_sinc_series(0), pm, grid), pm, amplitude=1.0)


def test_clamp_count_zero_when_bound_matches_uniform_noise():
    f = gen_sinc_series(3)
    grid = grid_for()
    pm = PmConfig(0.0, math.pi / 2, 0.1)
    noise = NoiseSpec("uniform", 0.03, 99)
    y = add_noise(pm_modulate(f, pm, grid), noise)
    assert dpd_asin(y, pm, rescale_bound(noise)).clamp_count == 0
    assert dpd_asin(y, pm, 0.0).clamp_count > 0


def test_gaussian_rescale_uses_three_sigma():
    assert rescale_bound(NoiseSpec("gaussian", 0.02)) == pytest.approx(0.06)
    assert rescale_bound(NoiseSpec("uniform", 0.02)) == 0.02


# --- jitter -----------------------------------------------------------------


def jittered_case(eps_frac, mu_c=math.pi / 4, seed=0):
    f = gen_sinc_series(seed)
    base = grid_for()
    rng = np.random.default_rng(seed)
    eps = eps_frac * base.interval * rng.choice([-1.0, 1.0], len(base))
    grid = SamplingGrid.jittered(base.t0, base.interval, eps)
    pm = PmConfig(grid.rate, mu_c, 0.1)
    return f, grid, pm, pm_modulate(f, pm, grid)


def test_jitter_recovery_exact_inside_bound():
    f, grid, pm, y = jittered_case(0.1)
    rep = dpd_asin_jitter(y, pm, amplitude=1.0)
    assert np.max(np.abs(rep.values - f(grid.times))) <= 1e-9


def test_jitter_zero_reduces_to_plain_asin():
    f = gen_sinc_series(5)
    grid = grid_for()
    pm = PmConfig(grid.rate, math.pi / 2, 0.1)
    y = pm_modulate(f, pm, grid)
    np.testing.assert_array_equal(dpd_asin_jitter(y, pm, np.zeros(len(grid))).values,
                                  dpd_asin(y, pm).values)


def test_jitter_guard_names_bound():
    # omega_c * eps = 0.35 pi, mu c = pi / 4: total 0.6 pi
    f, grid, pm, y = jittered_case(0.175)
    with pytest.raises(ConditionError, match="exceeds pi/2"):
        dpd_asin_jitter(y, pm, amplitude=1.0)


def test_plain_asin_refuses_jittered_grid_with_carrier():
    _, _, pm, y = jittered_case(0.1)
    with pytest.raises(CarrierError):
        dpd_asin(y, pm)


# --- DHT ----------------------------------------------------------------------


def test_dht_cos_to_sin():
    n = np.arange(64)
    w0 = 2 * math.pi * 5 / 64
    np.testing.assert_allclose(dht(np.cos(w0 * n)), np.sin(w0 * n), atol=1e-12)


def test_dht_constant_gives_zero():
    np.testing.assert_allclose(dht(np.full(17, 3.0)), 0.0, atol=1e-14)


def _strip_dc_nyquist(x):
    spec = np.fft.fft(x)
    spec[0] = 0
    if len(x) % 2 == 0:
        spec[len(x) // 2] = 0
    return np.fft.ifft(spec).real


@given(arrays(float, st.integers(2, 200), elements=st.floats(-10, 10)))
def test_dht_involution_and_parseval(x):
    x = _strip_dc_nyquist(x)
    h = dht(x)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(x))))
    np.testing.assert_allclose(dht(h), -x, atol=tol)
    assert np.sum(h**2) == pytest.approx(np.sum(x**2), rel=1e-9, abs=1e-18)


def test_dht_is_real_within_tolerance():
    x = np.random.default_rng(0).standard_normal(101)
    y = np.fft.ifft(np.fft.fft(x) * np.where(np.fft.fftfreq(101) > 0, -1j, 1j) * (np.arange(101) != 0))
    assert np.max(np.abs(y.imag)) < 1e-12
    np.testing.assert_allclose(dht(x), y.real, atol=1e-12)


def test_dht_needs_two_samples():
    with pytest.raises(DemodError):
        dht([1.0])


def test_analytic_sequence_of_pure_tone():
    n = np.arange(128)
    theta = 2 * math.pi * 9 / 128 * n
    np.testing.assert_allclose(analytic_pm(np.sin(theta)), np.exp(1j * theta), atol=1e-12)


# --- lowpass and Carson --------------------------------------------------------


def test_lowpass_identity_above_content():
    n = np.arange(256)
    x = np.sin(2 * math.pi * 5 / 256 * n)
    np.testing.assert_allclose(lowpass_ideal(x, 1000.0, 0.9 * math.pi * 1000.0), x, atol=1e-12)


def test_lowpass_two_tone_suppression():
    fs, n = 1000.0, np.arange(1000)
    inband = np.sin(2 * math.pi * 50 * n / fs)
    out = lowpass_ideal(inband + np.sin(2 * math.pi * 300 * n / fs), fs, 2 * math.pi * 100)
    residual = np.sum((out - inband) ** 2) / np.sum(inband**2)
    assert 10 * math.log10(residual + 1e-300) < -120


def test_lowpass_white_half_band():
    fs = 1000.0
    ratios = []
    for seed in range(20):
        x = np.random.default_rng(seed).standard_normal(4096)
        y = lowpass_ideal(x, fs, math.pi * fs / 2)
        assert np.sum(y**2) <= np.sum(x**2)
        ratios.append(np.sum(y**2) / np.sum(x**2))
    assert np.mean(ratios) == pytest.approx(0.5, abs=0.02)


def test_lowpass_rejects_bad_cutoff():
    with pytest.raises(DemodError):
        lowpass_ideal(np.ones(8), 10.0, 100.0)


def test_carson_examples():
    assert carson_bandwidth(Sinusoid(1.0, WM), 2.0, WM) == pytest.approx(3 * WM, rel=1e-9)
    assert carson_bandwidth(SincSeries(np.zeros(9), T), 2.0, WM) == WM
    # Bernstein: a unit-peak signal of band omega_m cannot exceed (mu + 1) omega_m
    for seed in range(5):
        bw = carson_bandwidth(gen_sinc_series(seed), 2.0, WM)
        assert WM < bw <= 3 * WM * (1 + 1e-9)


# --- Hilbert --------------------------------------------------------------------


def test_hilbert_pure_carrier_recovers_zero():
    grid = grid_for(of=6, multiple=4)
    pm = PmConfig(grid.rate / 4, 2.0, 0.1)
    y = pm_modulate(SincSeries(np.zeros(9), T), pm, grid)
    rep = dpd_hilbert(y, pm, WM)
    assert np.max(np.abs(rep.values)) <= 1e-6 * pm.lam / pm.mu


def test_hilbert_noiseless_recovery_is_close():
    f = gen_sinc_series(1)
    grid = grid_for(of=6, margin=12, multiple=4)
    pm = PmConfig(grid.rate / 4, 1.0, 0.1)
    rep = dpd_hilbert(pm_modulate(f, pm, grid), pm, WM, bandwidth=carson_bandwidth(f, 1.0, WM))
    assert nmse_db(f(grid.times), rep.values).db < -40


def test_hilbert_warnings():
    f = gen_sinc_series(1)
    grid = grid_for(of=2, multiple=4)
    pm = PmConfig(0.75 * grid.rate, 2.0, 0.1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dpd_hilbert(pm_modulate(f, pm, grid), pm, WM)
    assert any("twice the carrier" in str(w.message) for w in caught)


def test_hilbert_edge_trim_and_empty():
    grid = grid_for(of=6, multiple=4)
    pm = PmConfig(grid.rate / 4, 2.0, 0.1)
    y = pm_modulate(gen_sinc_series(0), pm, grid)
    rep = dpd_hilbert(y, pm, WM, edge_trim=3)
    assert np.isnan(rep.values[:3]).all() and np.isnan(rep.values[-3:]).all()
    # flag reports whether the carrier is a multiple of the sampling rate
    assert not rep.carrier_ok
    empty = SampleStream(SamplingGrid.uniform(0.0, T, 0), [], "pm", 0.1)
    with pytest.raises(DemodError, match="empty"):
        dpd_hilbert(empty, pm, WM)


def test_quadrature_error_shrinks_with_carrier():
    # Bedrosian: the DHT of the PM samples approaches the true quadrature
    # as the carrier moves away from the message band (omega_s = 4 omega_c).
    mu = 2.0
    errs = []
    for seed in range(9):
        f = gen_sinc_series(seed)
        bw = carson_bandwidth(f, mu, WM)
        row = []
        for m in (2, 4, 8):
            wc = m * bw
            grid = SamplingGrid.covering(-12 * T, 12 * T, 2 * math.pi / (4 * wc), 4)
            pm = PmConfig(wc, mu, 1.0)
            y = pm_modulate(f, pm, grid).values
            quad = -np.cos(carrier_phase(wc, grid) + mu * f(grid.times))
            row.append(np.linalg.norm(dht(y) - quad) / np.linalg.norm(quad))
        errs.append(row)
    med = np.median(np.array(errs), axis=0)
    assert med[0] >= med[1] >= med[2]


def test_carrier_multiple_detection():
    grid = grid_for()
    assert carrier_multiple(0.0, grid) == 0
    assert carrier_multiple(2 * grid.rate, grid) == 2
    assert carrier_multiple(0.5 * grid.rate, grid) is None
    shifted = SamplingGrid.uniform(grid.t0 + 0.3 * grid.interval, grid.interval, len(grid))
    assert carrier_multiple(grid.rate, shifted) is None
