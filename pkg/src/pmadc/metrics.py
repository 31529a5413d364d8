"""Error metrics and Shannon reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FLOOR_DB = -300.0


@dataclass(frozen=True)
class NmseResult:
    db: float
    numerator: float
    denominator: float

    @property
    def linear(self) -> float:
        return self.numerator / self.denominator

    def __float__(self) -> float:
        return self.db


def nmse_db(truth, estimate) -> NmseResult:
    """``10 log10(sum|f - f_hat|^2 / sum|f|^2)``, floored at -300 dB."""
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise ValueError(f"length mismatch: {truth.shape} vs {estimate.shape}")
    den = float(np.sum(truth**2))
    if den == 0:
        raise ValueError("truth has zero energy")
    num = float(np.sum((truth - estimate) ** 2))
    if num == 0:
        return NmseResult(FLOOR_DB, num, den)
    return NmseResult(max(10 * math.log10(num / den), FLOOR_DB), num, den)


def mean_nmse_db(values_db) -> float:
    """Average NMSE over trials: linear mean, reported in dB."""
    lin = np.power(10.0, np.asarray(values_db, dtype=float) / 10)
    if len(lin) == 0:
        return float("nan")
    return float(max(10 * np.log10(np.mean(lin)), FLOOR_DB))


def sinc_reconstruct(samples, t) -> np.ndarray:
    """``sum_n x_n sinc((t - t_n)/Ts)`` over the full record."""
    grid = samples.grid
    if grid.kind != "uniform":
        raise ValueError("sinc reconstruction needs a uniform grid")
    t = np.asarray(t, dtype=float)
    u = (t.ravel() - grid.t0) / grid.interval
    n = np.arange(len(grid))
    out = np.empty_like(u)
    for lo in range(0, len(u), 1024):
        out[lo:lo + 1024] = np.sinc(u[lo:lo + 1024, None] - n) @ samples.values
    return out.reshape(t.shape)
