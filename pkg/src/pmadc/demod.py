"""Discrete phase demodulation: recover f(t_n) from PM samples."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .frontend import NoiseSpec, PmConfig, SampleStream, carrier_phase
from .signals import derivative_bound


class DemodError(ValueError):
    """Raised when a demodulator's preconditions cannot be met."""


class CarrierError(DemodError):
    """Carrier is not an integer multiple of the sampling rate."""


class ConditionError(DemodError):
    """An identifiability bound is violated."""


@dataclass(frozen=True)
class DemodReport:
    values: np.ndarray
    method: str
    clamp_count: int = 0
    carrier_ok: bool = True
    bandwidth: Optional[float] = None


def rescale_bound(noise: NoiseSpec, gaussian_factor: float = 3.0) -> float:
    """Noise bound to add to lambda before asin.

    Uniform noise is bounded by its scale. Gaussian noise has no bound, so
    ``gaussian_factor`` standard deviations are used instead.
    """
    if noise.family == "uniform":
        return noise.scale
    return gaussian_factor * noise.scale


def carrier_multiple(carrier: float, grid, tol: float = 1e-9) -> Optional[int]:
    """Return k if ``carrier == k * omega_s`` on an ``n Ts`` lattice, else None."""
    if carrier == 0:
        return 0
    if grid.kind == "explicit":
        return None
    k = carrier / grid.rate
    n0 = grid.start_index
    if abs(k - round(k)) > tol or round(k) < 1 or abs(n0 - round(n0)) > 1e-9:
        return None
    return int(round(k))


def _check_carrier(stream: SampleStream, pm: PmConfig) -> int:
    k = carrier_multiple(pm.carrier, stream.grid)
    if k is None:
        raise CarrierError(
            f"carrier {pm.carrier:.6g} rad/s is not an integer multiple of the sampling "
            "rate on an n*Ts grid; asin demodulation needs carrier = 0 or k*omega_s"
        )
    return k


def _asin_clamped(ratio: np.ndarray) -> tuple[np.ndarray, int]:
    clamps = int(np.count_nonzero(np.abs(ratio) > 1))
    return np.arcsin(np.clip(ratio, -1.0, 1.0)), clamps


def dpd_asin(stream: SampleStream, pm: PmConfig, noise_bound: float = 0.0,
             amplitude: Optional[float] = None) -> DemodReport:
    """Instantaneous demodulation ``(1/mu) asin(y_n / (lam + noise_bound))``.

    Exact for noiseless samples when ``|mu f| <= pi/2`` and the carrier is 0
    or a positive integer multiple of the sampling rate.
    """
    if stream.grid.kind == "jittered" and pm.carrier != 0:
        raise CarrierError("jittered grids with a carrier need dpd_asin_jitter")
    _check_carrier(stream, pm)
    denom = pm.lam + noise_bound
    if denom == 0:
        raise DemodError("lambda + noise bound is zero")
    if amplitude is not None and pm.mu * amplitude > math.pi / 2 * (1 + 1e-12):
        warnings.warn(f"mu*c = {pm.mu * amplitude:.4g} exceeds pi/2; asin recovery is not unique",
                      stacklevel=2)
    theta, clamps = _asin_clamped(stream.values / denom)
    return DemodReport(theta / pm.mu, "asin", clamps, True)


def dpd_asin_jitter(stream: SampleStream, pm: PmConfig, jitter=None,
                    amplitude: float = 1.0) -> DemodReport:
    """asin demodulation on jittered instants ``t_n = n Ts + eps_n``.

    The known carrier offset ``carrier * eps_n`` is removed after the asin.
    Requires ``carrier * max|eps| + mu * c <= pi/2``.
    """
    grid = stream.grid
    if jitter is None:
        jitter = grid.jitter if grid.kind == "jittered" else np.zeros(len(grid))
    jitter = np.asarray(jitter, dtype=float)
    if jitter.shape != (len(stream),):
        raise DemodError("need one jitter value per sample")
    if grid.kind == "explicit" or carrier_multiple(pm.carrier, grid) is None:
        raise CarrierError("carrier must be 0 or k*omega_s on an n*Ts grid")
    eps = float(np.max(np.abs(jitter))) if len(jitter) else 0.0
    worst = pm.carrier * eps + pm.mu * amplitude
    if worst > math.pi / 2 * (1 + 1e-12):
        raise ConditionError(
            f"|omega_c*eps + mu*c| = {worst:.6g} exceeds pi/2 "
            f"(omega_c*eps = {pm.carrier * eps:.6g}, mu*c = {pm.mu * amplitude:.6g})"
        )
    theta, clamps = _asin_clamped(stream.values / pm.lam)
    return DemodReport((theta - pm.carrier * jitter) / pm.mu, "asin-jitter", clamps, True)


def _spectral_multiplier(n: int) -> np.ndarray:
    h = np.zeros(n, dtype=complex)
    h[1:(n + 1) // 2] = -1j
    h[n // 2 + 1:] = 1j
    return h


def dht(values) -> np.ndarray:
    """Discrete Hilbert transform by DFT multiplier.

    Positive-frequency bins get ``-j``, negative ones ``+j``; DC and (even
    length) the Nyquist bin are zeroed. ``dht(cos) = sin``.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DemodError("dht needs a 1-D sequence of length >= 2")
    y = np.fft.ifft(np.fft.fft(x) * _spectral_multiplier(len(x)))
    return y.real


def lowpass_ideal(values, fs: float, cutoff: float) -> np.ndarray:
    """Zero every DFT bin above ``cutoff`` rad/s; ``fs`` in samples/s.

    Real input gives real output. Complex input is filtered as is.
    """
    if not 0 < cutoff < math.pi * fs:
        raise DemodError(f"cutoff must lie in (0, pi*fs) = (0, {math.pi * fs:.6g})")
    x = np.asarray(values)
    omega = 2 * np.pi * fs * np.fft.fftfreq(len(x))
    spectrum = np.fft.fft(x)
    spectrum[np.abs(omega) > cutoff] = 0
    y = np.fft.ifft(spectrum)
    return y if np.iscomplexobj(x) else y.real


def carson_bandwidth(model, mu: float, omega_m: float, grid_density: int = 64) -> float:
    """Carson's rule ``mu * max|f'| + omega_m`` in rad/s."""
    if not mu > 0:
        raise DemodError("mu must be positive")
    return mu * derivative_bound(model, grid_density) + omega_m


def analytic_pm(values) -> np.ndarray:
    """Analytic sequence ``-dht(y) + j y``; for y = sin(theta) this is exp(j theta)."""
    y = np.asarray(values, dtype=float)
    return -dht(y) + 1j * y


def dpd_hilbert(stream: SampleStream, pm: PmConfig, omega_m: float, denoise: bool = False,
                bandwidth: Optional[float] = None, unwrap: bool = False,
                edge_trim: int = 0) -> DemodReport:
    """Hilbert-transform demodulation.

    Builds the analytic sequence of the PM samples, removes the carrier and
    takes ``arg / mu``. ``bandwidth`` is the Carson bandwidth
    ``delta_omega + omega_m``; when omitted, Bernstein's bound for a unit-peak
    signal (``delta_omega = mu * omega_m``) is used. With ``denoise`` the
    carrier-free baseband sequence is ideal-lowpass filtered at that
    bandwidth before the phase is taken, which is the same as bandpassing the
    PM samples around the carrier.

    ``edge_trim`` samples at each end are set to NaN (diagnostics only).
    """
    grid = stream.grid
    if len(stream) == 0:
        raise DemodError("empty stream")
    if grid.interval is None:
        raise DemodError("Hilbert demodulation needs a (nominally) uniform grid")
    if bandwidth is None:
        bandwidth = pm.mu * omega_m + omega_m
    ws = grid.rate
    if ws < 2 * pm.carrier * (1 - 1e-12):
        warnings.warn("sampling rate below twice the carrier", stacklevel=2)
    if pm.carrier < bandwidth * (1 - 1e-12):
        warnings.warn(f"carrier {pm.carrier:.4g} rad/s below Carson bandwidth {bandwidth:.4g} rad/s",
                      stacklevel=2)
    baseband = analytic_pm(stream.values / pm.lam) * np.exp(-1j * carrier_phase(pm.carrier, grid))
    if denoise and bandwidth < ws / 2:
        baseband = lowpass_ideal(baseband, grid.rate_hz, bandwidth)
    phase = np.angle(baseband)
    if unwrap:
        phase = np.unwrap(phase)
    out = phase / pm.mu
    if edge_trim:
        out = out.copy()
        out[:edge_trim] = np.nan
        out[len(out) - edge_trim:] = np.nan
    return DemodReport(out, "hilbert", 0, carrier_multiple(pm.carrier, grid) is not None, bandwidth)
