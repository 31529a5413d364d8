"""Analog front ends: PM modulation, modulo folding, attenuation, kernel
prefiltering, plus sampling, additive noise and uniform quantization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import integrate

from .signals import InvalidParameterError, SamplingGrid, make_rng, scale_model

STAGES = ("pm", "folded", "attenuated", "clean", "noisy", "quantized", "recovered")


@dataclass(frozen=True)
class PmConfig:
    """Carrier ``carrier`` (rad/s), PM index ``mu`` and ADC half-range ``lam``."""

    carrier: float
    mu: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParameterError("lambda must be positive")
        if not self.mu > 0:
            raise InvalidParameterError("mu must be positive")
        if not self.carrier >= 0:
            raise InvalidParameterError("carrier must be >= 0")

    @property
    def carrier_hz(self) -> float:
        return self.carrier / (2 * math.pi)


@dataclass(frozen=True)
class NoiseSpec:
    family: str = "uniform"
    scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("uniform", "gaussian"):
            raise InvalidParameterError(f"unknown noise family {self.family!r}")
        if not self.scale >= 0:
            raise InvalidParameterError("noise scale must be >= 0")


@dataclass(frozen=True)
class QuantizerSpec:
    """``2**bits`` uniform levels with both endpoints of ``[lo, hi]`` included.

    ``common_mode`` is added before quantizing and removed afterwards, which
    models single-supply converters that see ``x + Vcm``.
    """

    bits: int
    lo: float = -1.0
    hi: float = 1.0
    common_mode: float = 0.0

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise InvalidParameterError("bits must be an integer >= 1")
        if not self.hi > self.lo:
            raise InvalidParameterError("need hi > lo")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (2**self.bits - 1)

    @classmethod
    def symmetric(cls, bits: int, half_range: float) -> "QuantizerSpec":
        return cls(bits, -half_range, half_range)

    @classmethod
    def single_supply(cls, bits: int = 8, supply: float = 3.3) -> "QuantizerSpec":
        """Rail-to-rail converter on ``[0, supply]`` fed with a mid-rail bias.

        The defaults reproduce the 8-bit, 3.3 V prototype (lambda = 1.65 V).
        """
        return cls(bits, 0.0, supply, supply / 2)


@dataclass(frozen=True)
class SampleStream:
    grid: SamplingGrid
    values: np.ndarray
    stage: str = "clean"
    lam: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise InvalidParameterError(f"{len(v)} values for a grid of {len(self.grid)} instants")
        if self.stage not in STAGES:
            raise InvalidParameterError(f"unknown stage {self.stage!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def evolve(self, values, stage: str, **meta) -> "SampleStream":
        return replace(self, values=values, stage=stage, meta={**self.meta, **meta})


def sample(model, grid: SamplingGrid) -> SampleStream:
    """Plain point samples ``f(t_n)``."""
    return SampleStream(grid, model(grid.times), "clean")


def carrier_phase(carrier: float, grid: SamplingGrid) -> np.ndarray:
    """``carrier * t_n`` reduced to [0, 2 pi).

    On ``n Ts`` lattices the phase is accumulated in cycles per sample and
    reduced exactly, so carriers that are integer multiples of the sampling
    rate give a phase of exactly zero at every nominal instant.
    """
    if carrier == 0:
        return np.zeros(len(grid))
    if grid.kind == "explicit":
        return np.mod(carrier * grid.times, 2 * np.pi)
    cycles_per_sample = carrier * grid.interval / (2 * np.pi)
    k = round(cycles_per_sample)
    if abs(cycles_per_sample - k) <= 1e-12 * max(1.0, abs(cycles_per_sample)):
        cycles_per_sample = float(k)
    frac_step = cycles_per_sample - math.floor(cycles_per_sample)
    n0 = grid.start_index
    m0 = round(n0)
    if abs(n0 - m0) > 1e-9:
        # grid not on the n*Ts lattice; fall back to direct products
        cycles = np.mod(carrier * grid.nominal / (2 * np.pi), 1.0)
    else:
        idx = m0 + np.arange(len(grid), dtype=np.int64)
        cycles = np.mod(frac_step * idx, 1.0)
    phase = 2 * np.pi * cycles
    if grid.kind == "jittered":
        phase = phase + carrier * grid.jitter
    return np.mod(phase, 2 * np.pi)


def pm_modulate(model, pm: PmConfig, grid: SamplingGrid) -> SampleStream:
    """Samples of ``lam * sin(carrier t + mu f(t))``."""
    f = model(grid.times)
    values = pm.lam * np.sin(carrier_phase(pm.carrier, grid) + pm.mu * f)
    return SampleStream(grid, values, "pm", pm.lam, {"mu": pm.mu, "carrier": pm.carrier})


def centered_modulo(x, lam: float):
    """Fold ``x`` into [-lam, lam); ``x - result`` is a multiple of 2 lam."""
    if not lam > 0:
        raise InvalidParameterError("lambda must be positive")
    x = np.asarray(x, dtype=float)
    out = x - 2 * lam * np.floor(x / (2 * lam) + 0.5)
    # float rounding can land exactly on +lam
    out = np.where(out >= lam, out - 2 * lam, out)
    out = np.where(out < -lam, out + 2 * lam, out)
    return float(out) if out.ndim == 0 else out


def modulo_fold(model, lam: float, grid: SamplingGrid) -> SampleStream:
    f = model(grid.times)
    folded = centered_modulo(f, lam)
    residual = np.asarray(f - folded)
    return SampleStream(grid, folded, "folded", lam, {"residual": residual})


def attenuate(model, gain: float):
    if not 0 < gain <= 1:
        raise InvalidParameterError("gain must lie in (0, 1]")
    if gain == 1:
        return model
    return scale_model(model, gain)


@dataclass(frozen=True)
class IdentityKernel:
    support: float = 0.0


def kernel_sample(model, kernel, grid: SamplingGrid, rtol: float = 1e-8) -> SampleStream:
    """Samples of ``(f * g)(t_n)``, integrating over the kernel's support.

    ``kernel`` must expose ``support`` (half-width) and be callable;
    ``IdentityKernel`` returns the point samples.
    """
    if isinstance(kernel, IdentityKernel):
        return sample(model, grid)
    support = getattr(kernel, "support", None)
    if support is None or not callable(kernel) or not support > 0:
        raise InvalidParameterError(f"unsupported kernel {kernel!r}")
    breaks = [b for b in getattr(kernel, "breakpoints", ()) if -support < b < support]
    out = np.empty(len(grid))
    for i, t in enumerate(grid.times):
        # (f*g)(t) = int g(s) f(t - s) ds
        val, _ = integrate.quad(lambda s: float(kernel(s) * model(t - s)), -support, support,
                                points=breaks or None, epsrel=rtol, epsabs=1e-14, limit=400)
        out[i] = val
    return SampleStream(grid, out, "clean", meta={"kernel": type(kernel).__name__})


def noise_draws(spec: NoiseSpec, n: int) -> np.ndarray:
    if spec.scale == 0:
        return np.zeros(n)
    rng = make_rng(spec.seed)
    if spec.family == "uniform":
        return rng.uniform(-spec.scale, spec.scale, n)
    return spec.scale * rng.standard_normal(n)


def add_noise(stream: SampleStream, spec: NoiseSpec) -> SampleStream:
    noisy = stream.values + noise_draws(spec, len(stream))
    return stream.evolve(noisy, "noisy", noise_family=spec.family, noise_scale=spec.scale)


def quantize_values(x, q: QuantizerSpec) -> tuple[np.ndarray, int]:
    x = np.asarray(x, dtype=float) + q.common_mode
    clipped = int(np.count_nonzero((x < q.lo) | (x > q.hi)))
    x = np.clip(x, q.lo, q.hi)
    levels = np.rint((x - q.lo) / q.step)
    out = q.lo + levels * q.step
    out = np.minimum(out, q.hi)
    return out - q.common_mode, clipped


def quantize(stream: SampleStream, q: QuantizerSpec) -> SampleStream:
    """Saturate to the converter range, then snap to the nearest level."""
    values, clipped = quantize_values(stream.values, q)
    return stream.evolve(values, "quantized", clip_count=clipped, bits=q.bits)


# ---------------------------------------------------------------------------
# Stream serialization
# ---------------------------------------------------------------------------


def write_stream(stream: SampleStream, path) -> None:
    grid = stream.grid
    header = [f"stage={stream.stage}"]
    if grid.interval is not None:
        header.append(f"rate_hz={float(grid.rate_hz)!r}")
    if stream.lam is not None:
        header.append(f"lambda={float(stream.lam)!r}")
    with Path(path).open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for t, v in zip(stream.times, stream.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def read_stream(path) -> SampleStream:
    meta: dict = {}
    times, values = [], []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, val = token.partition("=")
                    meta[key] = val
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 't,value'")
            times.append(float(parts[0]))
            values.append(float(parts[1]))
    t = np.array(times)
    stage = meta.get("stage", "clean")
    lam = float(meta["lambda"]) if "lambda" in meta else None
    if "rate_hz" in meta and len(t) > 0:
        ts = 1.0 / float(meta["rate_hz"])
        n0 = round(t[0] / ts)
        t0 = n0 * ts if abs(t[0] / ts - n0) < 1e-6 else t[0]
        grid = SamplingGrid.uniform(t0, ts, len(t))
        if not np.allclose(grid.times, t, rtol=0, atol=1e-9 * ts + 1e-15):
            grid = SamplingGrid.from_times(t)
    else:
        grid = SamplingGrid.from_times(t)
    return SampleStream(grid, values, stage, lam)


__all__ = [
    "PmConfig", "NoiseSpec", "QuantizerSpec", "SampleStream", "IdentityKernel", "sample",
    "carrier_phase", "pm_modulate", "centered_modulo", "modulo_fold", "attenuate",
    "kernel_sample", "add_noise", "noise_draws", "quantize", "quantize_values",
    "write_stream", "read_stream",
]
