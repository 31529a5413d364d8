"""Continuous-time signal models and sampling grids.

Every model is a frozen dataclass that can be evaluated at arbitrary
instants (``model(t)``) and knows the time span that carries its energy
(``span()``) plus a natural time resolution (``resolution``) used to build
dense evaluation grids.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize


class InvalidParameterError(ValueError):
    """Raised when a model or grid is built from unusable parameters."""


class RecordFormatError(ValueError):
    """Raised for malformed or inconsistent record files."""


def _finite(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not np.all(np.isfinite(value)):
            raise InvalidParameterError(f"{name} must be finite, got {value!r}")


def _as_array(t) -> np.ndarray:
    return np.asarray(t, dtype=float)


# ---------------------------------------------------------------------------
# Pulse / basis shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Triangle:
    """Unit-height triangle supported on ``[-half_width, half_width]``."""

    half_width: float = 0.5

    @property
    def support(self) -> float:
        return self.half_width

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (-self.half_width, 0.0, self.half_width)

    def __call__(self, t):
        t = _as_array(t)
        return np.clip(1.0 - np.abs(t) / self.half_width, 0.0, None)


@dataclass(frozen=True)
class Gaussian:
    """Unit-height Gaussian ``exp(-t^2 / (2 sigma^2))``.

    The support is truncated at ``n_sigma`` standard deviations, beyond which
    the pulse is below 1e-9 of its peak for the default ``n_sigma=6.5``.
    """

    sigma: float = 1.0
    n_sigma: float = 6.5

    @property
    def support(self) -> float:
        return self.n_sigma * self.sigma

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,)

    def __call__(self, t):
        t = _as_array(t)
        return np.exp(-0.5 * (t / self.sigma) ** 2)


@dataclass(frozen=True)
class SincKernel:
    """Ideal lowpass kernel ``sinc(t / step)`` with cutoff ``pi / step``.

    ``support`` is a truncation span only; the kernel decays like ``1/t``.
    """

    step: float = 1.0
    span_steps: float = 64.0

    @property
    def support(self) -> float:
        return self.span_steps * self.step

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,)

    def __call__(self, t):
        return np.sinc(_as_array(t) / self.step)


PULSE_SHAPES = {"triangle": Triangle, "gaussian": Gaussian, "sinc": SincKernel}


# ---------------------------------------------------------------------------
# Signal models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SincSeries:
    """Truncated Shannon series ``scale * sum_k r_k sinc(t/T - k)``, k = -Nc..Nc.

    Bandlimited to ``pi / nyquist_interval`` rad/s by construction.
    """

    coefficients: np.ndarray
    nyquist_interval: float
    scale: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.ndim != 1 or len(coeffs) % 2 != 1:
            raise InvalidParameterError("coefficients must be a 1-D array of odd length 2*Nc+1")
        _finite(coefficients=coeffs, nyquist_interval=self.nyquist_interval, scale=self.scale)
        if self.nyquist_interval <= 0:
            raise InvalidParameterError("nyquist_interval must be positive")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def nc(self) -> int:
        return (len(self.coefficients) - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.nc, self.nc + 1)

    @property
    def bandwidth(self) -> float:
        """Maximum angular frequency (rad/s)."""
        return math.pi / self.nyquist_interval

    @property
    def resolution(self) -> float:
        return self.nyquist_interval

    def span(self) -> tuple[float, float]:
        margin = self.nc + 4
        return (-margin * self.nyquist_interval, margin * self.nyquist_interval)

    def __call__(self, t):
        t = _as_array(t)
        x = t[..., None] / self.nyquist_interval - self.indices
        return self.scale * (_lattice_sinc(x) @ self.coefficients)

    def derivative(self, t):
        t = _as_array(t)
        x = t[..., None] / self.nyquist_interval - self.indices
        return self.scale * (_dsinc(x) @ self.coefficients) / self.nyquist_interval

    def scaled(self, gain: float) -> "SincSeries":
        return SincSeries(self.coefficients, self.nyquist_interval, self.scale * gain, self.seed)


def _lattice_sinc(x: np.ndarray) -> np.ndarray:
    """``np.sinc`` with exact 0/1 values at (near-)integer arguments."""
    out = np.sinc(x)
    k = np.rint(x)
    on_lattice = np.abs(x - k) < 1e-12
    out[on_lattice] = (k[on_lattice] == 0).astype(float)
    return out


def _dsinc(x: np.ndarray) -> np.ndarray:
    """d/dx sinc(x) = (cos(pi x) - sinc(x)) / x, zero at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = np.abs(x) > 1e-8
    xn = x[nz]
    out[nz] = (np.cos(np.pi * xn) - np.sinc(xn)) / xn
    # Taylor term near zero: -(pi^2 / 3) x
    out[~nz] = -(np.pi**2 / 3.0) * x[~nz]
    return out


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        _finite(amplitude=self.amplitude, omega=self.omega, phase=self.phase)
        if self.omega <= 0:
            raise InvalidParameterError("omega must be positive")

    @property
    def bandwidth(self) -> float:
        return self.omega

    @property
    def resolution(self) -> float:
        return math.pi / self.omega

    def span(self) -> tuple[float, float]:
        return (0.0, 2 * math.pi / self.omega)

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * _as_array(t) + self.phase)

    def derivative(self, t):
        return self.amplitude * self.omega * np.cos(self.omega * _as_array(t) + self.phase)

    def scaled(self, gain: float) -> "Sinusoid":
        return Sinusoid(self.amplitude * gain, self.omega, self.phase)


@dataclass(frozen=True)
class PulseStream:
    """Finite-rate-of-innovation stream ``sum_l a_l h(t - tau_l)``."""

    pulse: Callable
    amplitudes: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=float)
        tau = np.array(self.delays, dtype=float)
        if a.ndim != 1 or a.shape != tau.shape or len(a) < 1:
            raise InvalidParameterError("need L >= 1 amplitudes and matching delays")
        _finite(amplitudes=a, delays=tau)
        if np.any(np.diff(tau) <= 0):
            raise InvalidParameterError("delays must be strictly increasing")
        a.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "delays", tau)

    @property
    def count(self) -> int:
        return len(self.amplitudes)

    @property
    def resolution(self) -> float:
        return self.pulse.support / 4

    def span(self) -> tuple[float, float]:
        return (self.delays[0] - self.pulse.support, self.delays[-1] + self.pulse.support)

    def __call__(self, t):
        t = _as_array(t)
        return self.pulse(t[..., None] - self.delays) @ self.amplitudes

    def scaled(self, gain: float) -> "PulseStream":
        return PulseStream(self.pulse, self.amplitudes * gain, self.delays)


@dataclass(frozen=True)
class ShiftInvariantSeries:
    """``sum_k a_k h(t - kT)`` for k = start_index .. start_index + len(a) - 1."""

    coefficients: np.ndarray
    basis: Callable
    step: float
    start_index: int = 0

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=float)
        if a.ndim != 1 or len(a) < 1:
            raise InvalidParameterError("coefficients must be a non-empty 1-D array")
        _finite(coefficients=a, step=self.step)
        if self.step <= 0:
            raise InvalidParameterError("step must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)

    @property
    def shifts(self) -> np.ndarray:
        return (self.start_index + np.arange(len(self.coefficients))) * self.step

    @property
    def resolution(self) -> float:
        return self.step

    def span(self) -> tuple[float, float]:
        s = self.shifts
        return (s[0] - self.basis.support, s[-1] + self.basis.support)

    def __call__(self, t):
        t = _as_array(t)
        return self.basis(t[..., None] - self.shifts) @ self.coefficients

    def scaled(self, gain: float) -> "ShiftInvariantSeries":
        return ShiftInvariantSeries(self.coefficients * gain, self.basis, self.step, self.start_index)


@dataclass(frozen=True)
class BaselinedRecord:
    """Sampled record plus a sinusoidal baseline ``A sin(2 pi f_bl t)``.

    Between samples the record is Shannon-interpolated; at sample instants
    ``t = t0 + n / rate`` the stored samples are returned directly.
    """

    samples: np.ndarray
    rate: float
    baseline_amplitude: float = 0.0
    baseline_freq: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or len(x) == 0:
            raise InvalidParameterError("record must hold at least one sample")
        _finite(samples=x, rate=self.rate, baseline_amplitude=self.baseline_amplitude,
                baseline_freq=self.baseline_freq)
        if self.rate <= 0:
            raise InvalidParameterError("rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.rate

    @property
    def resolution(self) -> float:
        return 1.0 / self.rate

    @property
    def bandwidth(self) -> float:
        return math.pi * self.rate

    def span(self) -> tuple[float, float]:
        return (self.t0, self.t0 + (len(self.samples) - 1) / self.rate)

    def with_baseline(self, amplitude: float, freq: float) -> "BaselinedRecord":
        return BaselinedRecord(self.samples, self.rate, amplitude, freq, self.t0)

    def baseline(self, t):
        return self.baseline_amplitude * np.sin(2 * np.pi * self.baseline_freq * _as_array(t))

    def base(self, t):
        t = _as_array(t)
        u = (t - self.t0) * self.rate
        k = np.rint(u)
        on_grid = (np.abs(u - k) < 1e-9) & (k >= 0) & (k < len(self.samples))
        if np.all(on_grid):
            return self.samples[k.astype(int)]
        flat = u.ravel()
        out = np.empty_like(flat)
        n = np.arange(len(self.samples))
        for lo in range(0, len(flat), 512):
            chunk = flat[lo:lo + 512]
            out[lo:lo + 512] = np.sinc(chunk[:, None] - n) @ self.samples
        return out.reshape(u.shape)

    def __call__(self, t):
        return self.base(t) + self.baseline(t)

    def sampled(self) -> np.ndarray:
        """Composite values at the record's own sample instants."""
        return self.samples + self.baseline(self.times)

    def scaled(self, gain: float) -> "BaselinedRecord":
        return BaselinedRecord(self.samples * gain, self.rate, self.baseline_amplitude * gain,
                               self.baseline_freq, self.t0)


@dataclass(frozen=True)
class Scaled:
    """Generic gain wrapper for models without a native ``scaled``."""

    model: object
    gain: float

    @property
    def resolution(self) -> float:
        return self.model.resolution

    def span(self):
        return self.model.span()

    def __call__(self, t):
        return self.gain * self.model(t)

    def scaled(self, gain: float) -> "Scaled":
        return Scaled(self.model, self.gain * gain)


def evaluate(model, t):
    """Evaluate ``model`` at instants ``t`` (scalar or array)."""
    out = model(t)
    return float(out) if np.ndim(out) == 0 else out


def scale_model(model, gain: float):
    if hasattr(model, "scaled"):
        return model.scaled(gain)
    return Scaled(model, gain)


# ---------------------------------------------------------------------------
# Generators and bounds
# ---------------------------------------------------------------------------


def make_rng(seed) -> np.random.Generator:
    """The repo-wide generator: PCG64 seeded through ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def gen_sinc_series(seed: int, nc: int = 4, t_nyq: float = 0.5e-3, mean: float = 0.5,
                    variance: float = 4.0, normalize: bool = True) -> SincSeries:
    """Random bandlimited signal with i.i.d. Gaussian Shannon coefficients.

    With ``normalize`` the series is rescaled so that its peak magnitude is 1
    (see :func:`amplitude_bound`).
    """
    _finite(nc=nc, t_nyq=t_nyq, mean=mean, variance=variance)
    if nc < 0 or variance < 0 or t_nyq <= 0:
        raise InvalidParameterError("need nc >= 0, variance >= 0, t_nyq > 0")
    rng = make_rng(seed)
    coeffs = rng.normal(mean, math.sqrt(variance), 2 * nc + 1)
    series = SincSeries(coeffs, t_nyq, 1.0, seed)
    if normalize:
        peak = amplitude_bound(series)
        if peak > 0:
            series = series.scaled(1.0 / peak)
    return series


def dense_grid(model, grid_density: int = 64) -> np.ndarray:
    lo, hi = model.span()
    step = model.resolution / grid_density
    # aligned to multiples of step so integer-sample instants are on the grid
    k0, k1 = math.floor(lo / step), math.ceil(hi / step)
    return np.arange(k0, k1 + 1) * step


def _refined_max_abs(fn, grid: np.ndarray, n_peaks: int = 4) -> float:
    """Max of |fn| on ``grid``, polished by bounded search around top cells."""
    vals = np.abs(fn(grid))
    best = float(vals.max()) if len(vals) else 0.0
    if best == 0.0 or len(grid) < 3:
        return best
    order = np.argsort(vals)[::-1]
    seen = set()
    for i in order[: 4 * n_peaks]:
        if len(seen) >= n_peaks:
            break
        if any(abs(i - j) <= 1 for j in seen):
            continue
        seen.add(i)
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = optimize.minimize_scalar(lambda s: -abs(float(fn(s))), bounds=(a, b),
                                       method="bounded", options={"xatol": 1e-14 * max(1.0, abs(b))})
        best = max(best, -float(res.fun))
    return best


def amplitude_bound(model, grid_density: int = 64) -> float:
    """Peak magnitude ``c`` of the model.

    Models with a smooth interpolant (sinc series, sinusoids, pulse and
    shift-invariant streams) are scanned on a dense grid of ``grid_density``
    points per resolution step and the best cells are polished by a bounded
    scalar search, so the result sits within ~1e-12 of the true peak.
    Records return the max over their own sample instants; the band-limited
    interpolant may overshoot that by a few percent between samples.
    """
    if grid_density < 8:
        raise InvalidParameterError("grid_density must be >= 8")
    if isinstance(model, BaselinedRecord):
        return float(np.max(np.abs(model.sampled())))
    return _refined_max_abs(model, dense_grid(model, grid_density))


def derivative_bound(model, grid_density: int = 64) -> float:
    """Peak magnitude of df/dt (1/s).

    Closed-form derivatives are used for sinc series and sinusoids; other
    models fall back to central differences at grid resolution, records to
    central differences at the record rate.
    """
    if grid_density < 8:
        raise InvalidParameterError("grid_density must be >= 8")
    if isinstance(model, BaselinedRecord):
        x = model.sampled()
        if len(x) < 2:
            return 0.0
        return float(np.max(np.abs(np.gradient(x, 1.0 / model.rate))))
    grid = dense_grid(model, grid_density)
    deriv = getattr(model, "derivative", None)
    if deriv is not None:
        return _refined_max_abs(deriv, grid)
    if isinstance(model, Scaled) and hasattr(model.model, "derivative"):
        return abs(model.gain) * derivative_bound(model.model, grid_density)
    h = grid[1] - grid[0]
    return float(np.max(np.abs((model(grid + h) - model(grid - h)) / (2 * h))))


# ---------------------------------------------------------------------------
# Record ingestion
# ---------------------------------------------------------------------------


def load_record_csv(path, expected_rate: Optional[float] = 500.0) -> BaselinedRecord:
    """Read a single-channel record and normalize it to max |x| = 1.

    Format: optional ``# rate_hz=<float>`` header, then one sample per line.
    Extra columns after a comma are not allowed.
    """
    path = Path(path)
    rate = None
    values: list[float] = []
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, val = token.partition("=")
                    if key == "rate_hz":
                        try:
                            rate = float(val)
                        except ValueError:
                            raise RecordFormatError(f"{path}:{lineno}: bad rate {val!r}") from None
                continue
            cells = next(csv.reader([line]))
            cells = [c for c in cells if c.strip()]
            if len(cells) != 1:
                raise RecordFormatError(f"{path}:{lineno}: expected one value per line, got {len(cells)}")
            try:
                values.append(float(cells[0]))
            except ValueError:
                raise RecordFormatError(f"{path}:{lineno}: not a number: {cells[0]!r}") from None
    if not values:
        raise RecordFormatError(f"{path}: no samples")
    if rate is None:
        if expected_rate is None:
            raise RecordFormatError(f"{path}: no rate header and no expected rate")
        rate = expected_rate
    elif expected_rate is not None and not math.isclose(rate, expected_rate, rel_tol=1e-9):
        raise RecordFormatError(f"{path}: rate {rate} Hz does not match expected {expected_rate} Hz")
    x = np.array(values)
    if not np.all(np.isfinite(x)):
        raise RecordFormatError(f"{path}: non-finite samples")
    peak = np.max(np.abs(x))
    if peak > 0:
        x = x / peak
    return BaselinedRecord(x, rate)


def write_record_csv(path, samples: Sequence[float], rate: float) -> None:
    with Path(path).open("w", newline="\n") as fh:
        fh.write(f"# rate_hz={rate!r}\n")
        for v in samples:
            fh.write(f"{float(v)!r}\n")


def synthetic_ecg(duration: float = 10.0, rate: float = 500.0, heart_rate: float = 72.0,
                  seed: int = 0, resp_depth: float = 0.15, resp_rate: float = 0.25) -> np.ndarray:
    """Sum-of-Gaussians ECG surrogate (P, Q, R, S, T waves per beat).

    Beat-to-beat RR intervals jitter by ~3 % and beat amplitudes by ~5 %.
    Respiration modulates every beat's amplitude by ``1 + resp_depth *
    sin(2 pi resp_rate t + phi)`` with a random phase. Intended as a
    stand-in record when no clinical recording is available.
    """
    rng = make_rng(seed)
    t = np.arange(int(round(duration * rate))) / rate
    # (relative position in beat, amplitude, width in s)
    waves = [(-0.20, 0.12, 0.025), (-0.03, -0.10, 0.010), (0.0, 1.0, 0.012),
             (0.03, -0.25, 0.010), (0.28, 0.30, 0.040)]
    x = np.zeros_like(t)
    rr = 60.0 / heart_rate
    phi = rng.uniform(0, 2 * np.pi)
    beat = 0.35
    while beat < duration + 1.0:
        gain = (1.0 + resp_depth * np.sin(2 * np.pi * resp_rate * beat + phi)) \
            * (1.0 + 0.05 * rng.standard_normal())
        for pos, amp, width in waves:
            x += gain * amp * np.exp(-0.5 * ((t - beat - pos * rr / 0.8) / width) ** 2)
        beat += rr * (1.0 + 0.03 * rng.standard_normal())
    return x


# ---------------------------------------------------------------------------
# Sampling grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform, jittered or explicit sampling instants.

    Uniform instants are ``t0 + n * interval``; jittered ones add ``jitter[n]``.
    ``interval`` is the nominal spacing (``None`` for explicit grids).
    """

    kind: str
    t0: float = 0.0
    interval: Optional[float] = None
    count: int = 0
    jitter: Optional[np.ndarray] = None
    explicit: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "jittered", "explicit"):
            raise InvalidParameterError(f"unknown grid kind {self.kind!r}")
        if self.kind == "explicit":
            t = np.array(self.explicit, dtype=float)
            if t.ndim != 1 or np.any(np.diff(t) <= 0):
                raise InvalidParameterError("explicit instants must be strictly increasing")
            t.setflags(write=False)
            object.__setattr__(self, "explicit", t)
            object.__setattr__(self, "count", len(t))
            return
        if self.interval is None or not self.interval > 0:
            raise InvalidParameterError("interval must be positive")
        if self.count < 0:
            raise InvalidParameterError("count must be >= 0")
        if self.kind == "jittered":
            eps = np.array(self.jitter, dtype=float)
            if eps.shape != (self.count,):
                raise InvalidParameterError("jitter must have one entry per sample")
            if np.any(np.abs(eps) >= self.interval / 2):
                raise InvalidParameterError("jitter must satisfy |eps_n| < Ts/2")
            eps.setflags(write=False)
            object.__setattr__(self, "jitter", eps)

    @classmethod
    def uniform(cls, t0: float, interval: float, count: int) -> "SamplingGrid":
        return cls("uniform", t0, interval, count)

    @classmethod
    def jittered(cls, t0: float, interval: float, jitter) -> "SamplingGrid":
        jitter = np.asarray(jitter, dtype=float)
        return cls("jittered", t0, interval, len(jitter), jitter)

    @classmethod
    def from_times(cls, times) -> "SamplingGrid":
        return cls("explicit", explicit=np.asarray(times, dtype=float))

    @classmethod
    def covering(cls, start: float, stop: float, interval: float, multiple: int = 1) -> "SamplingGrid":
        """Uniform grid on integer multiples of ``interval`` covering [start, stop].

        The count is rounded up to a multiple of ``multiple``.
        """
        n0 = math.floor(start / interval + 1e-9)
        n1 = math.ceil(stop / interval - 1e-9)
        count = n1 - n0 + 1
        count = multiple * math.ceil(count / multiple)
        return cls.uniform(n0 * interval, interval, count)

    def __len__(self) -> int:
        return self.count

    @property
    def nominal(self) -> np.ndarray:
        if self.kind == "explicit":
            return self.explicit
        return self.t0 + np.arange(self.count) * self.interval

    @property
    def times(self) -> np.ndarray:
        if self.kind == "jittered":
            return self.nominal + self.jitter
        return self.nominal

    @property
    def rate(self) -> float:
        """Sampling rate in rad/s."""
        if self.interval is None:
            raise InvalidParameterError("explicit grids have no nominal rate")
        return 2 * math.pi / self.interval

    @property
    def rate_hz(self) -> float:
        return 1.0 / self.interval

    @property
    def start_index(self) -> float:
        """``t0 / interval``; integer for grids on the ``n Ts`` lattice."""
        return self.t0 / self.interval

    def oversampling(self, omega_m: float) -> float:
        return self.rate / (2 * omega_m)
