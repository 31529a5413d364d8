"""Higher-order-difference (HoD) unfolding of modulo samples."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .frontend import SampleStream, centered_modulo

MAX_ORDER = 6


class UnfoldingError(ValueError):
    """Raised when the residual cannot be placed on the 2*lambda lattice."""


@dataclass(frozen=True)
class HodConfig:
    """Difference ``order``, ADC half-range ``lam``, signal bound ``beta``.

    ``strict`` is the noiseless mode: lattice membership is checked to a
    tight tolerance and an output exceeding ``beta`` raises. Otherwise every
    partial sum is rounded to the nearest lattice point.
    """

    order: int
    lam: float
    beta: float
    assume_unfolded_prefix: bool = True
    strict: bool = True

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be an integer >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.beta < self.lam:
            raise ValueError("beta must be >= lambda")


def _snap(x: np.ndarray, lam: float, strict: bool, what: str) -> np.ndarray:
    k = np.rint(x / (2 * lam))
    snapped = 2 * lam * k
    if strict:
        off = np.max(np.abs(x - snapped)) if len(x) else 0.0
        if off > 1e-9 * 2 * lam * max(1.0, float(np.max(np.abs(k), initial=0.0))):
            raise UnfoldingError(f"lattice violation in {what}: off by {off:.3g}")
    return snapped


def hod_unfold(folded, cfg: HodConfig) -> np.ndarray:
    """Recover true samples from modulo samples.

    Takes the ``order``-th difference of the folded samples, folds it again
    to isolate the residual's difference, then integrates back ``order``
    times with zero constants (valid when the first ``order`` true samples
    lie inside [-lam, lam)). Exact whenever ``max|diff^N f| < lam``.
    """
    if isinstance(folded, SampleStream):
        grid = folded.grid
        if grid.kind != "uniform":
            raise UnfoldingError("HoD needs a uniform grid")
        y = folded.values
    else:
        y = np.asarray(folded, dtype=float)
    if not cfg.assume_unfolded_prefix:
        raise NotImplementedError("only the zero-constant (unfolded prefix) mode is available")
    lam, n_ord = cfg.lam, cfg.order
    if cfg.beta <= lam:
        # the signal never leaves the ADC range, nothing was folded
        return y.copy()
    if len(y) <= n_ord:
        raise UnfoldingError(f"need more than {n_ord} samples for order {n_ord}")
    d = np.diff(y, n_ord)
    e = np.asarray(centered_modulo(d, lam)) - d
    e = _snap(e, lam, cfg.strict, "folded differences")
    for stage in range(n_ord):
        e = np.concatenate(([0.0], np.cumsum(e)))
        e = _snap(e, lam, cfg.strict, f"anti-difference {stage + 1}")
    out = y + e
    if cfg.strict:
        peak = float(np.max(np.abs(out)))
        if peak > cfg.beta * (1 + 1e-9) + 1e-12:
            raise UnfoldingError(
                f"lattice violation: unfolded samples reach {peak:.4g} > beta = {cfg.beta:.4g}; "
                f"sampling rate too low for order {n_ord}"
            )
    return out


def choose_order(oversampling: float, sigma: float = 0.0, beta: float = 1.0,
                 lam: float = 1.0) -> int:
    """Smallest N in [1, 6] with ``(pi/OF)^N * beta < lam``.

    With noise, orders that also keep ``2^N * sigma`` inside the margin are
    preferred; if none do, the noiseless rule applies.
    """
    if oversampling < 1:
        raise ValueError("oversampling factor must be >= 1")
    if beta <= lam:
        return 1
    shrink = math.pi / oversampling
    if sigma > 0:
        for n in range(1, MAX_ORDER + 1):
            if shrink**n * beta + 2**n * sigma < lam:
                return n
    for n in range(1, MAX_ORDER + 1):
        if shrink**n * beta < lam:
            return n
    warnings.warn(f"no order <= {MAX_ORDER} satisfies the HoD condition at OF={oversampling}",
                  stacklevel=2)
    return MAX_ORDER
