"""Monte-Carlo experiment runner: sweeps over OF, lambda, noise and method,
plus the ECG quantization study."""
from __future__ import annotations

import configparser
import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .demod import DemodError, dpd_asin, dpd_hilbert, carson_bandwidth, rescale_bound
from .frontend import (NoiseSpec, PmConfig, QuantizerSpec, SampleStream, add_noise, attenuate,
                       modulo_fold, pm_modulate, quantize, sample)
from .metrics import mean_nmse_db, nmse_db
from .signals import (BaselinedRecord, SamplingGrid, amplitude_bound, gen_sinc_series,
                      load_record_csv)
from .unfold import HodConfig, UnfoldingError, choose_order, hod_unfold

METHODS = ("asin", "hilbert", "hod", "attenuate", "direct")
PATHS = {"asin": "pm", "hilbert": "pm", "hod": "modulo", "attenuate": "attenuate", "direct": "direct"}
CSV_COLUMNS = ("method", "of", "lambda", "sigma_over_lambda", "trial", "nmse_db", "clamp_count",
               "skip_reason")
SUMMARY_COLUMNS = ("method", "of", "lambda", "sigma_over_lambda", "mean_nmse_db",
                   "median_nmse_db", "trials", "skipped")

# stream identifiers mixed into derived seeds
_SIGNAL_STREAM = 1
_NOISE_STREAM = 2


class ConfigError(ValueError):
    """Invalid experiment description; message names the offending field."""


def derive_seed(master: int, *keys: int) -> int:
    """Per-trial seed from a master seed and integer counters.

    Uses numpy's ``SeedSequence`` hash with the counters as spawn key, so
    seeds are independent of execution order.
    """
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SignalSpec:
    nc: int = 4
    t_nyq: float = 0.5e-3
    mean: float = 0.5
    variance: float = 4.0
    seed: int = 0
    policy: str = "per_trial"  # or "fixed"
    margin: float = 0.0  # record extends this many T_nyq beyond the coefficient window

    def build(self, master_seed: int, trial: int):
        seed = self.seed if self.policy == "fixed" else derive_seed(master_seed, _SIGNAL_STREAM, trial)
        return gen_sinc_series(seed, self.nc, self.t_nyq, self.mean, self.variance, normalize=True)


@dataclass(frozen=True)
class ExperimentSpec:
    signal: SignalSpec = field(default_factory=SignalSpec)
    oversampling: tuple[float, ...] = (1.0,)
    lambdas: tuple[float, ...] = (0.1,)
    sigma_over_lambda: tuple[float, ...] = (0.0,)
    noise_family: str = "uniform"
    methods: tuple[str, ...] = ("asin",)
    trials: int = 50
    master_seed: int = 0
    asin_carrier_multiple: int = 0
    gaussian_factor: float = 3.0
    hilbert_mu: float = 2.0
    hilbert_carrier_fraction: float = 0.25
    hilbert_denoise: bool = False
    hod_order: Union[str, int] = "auto"
    bits: Optional[int] = None
    output: Optional[str] = None

    def validate(self) -> None:
        problems = []
        if not self.oversampling or any(not of >= 1 for of in self.oversampling):
            problems.append("grid.oversampling: every OF must be >= 1")
        if not self.lambdas or any(not lam > 0 for lam in self.lambdas):
            problems.append("frontend.lambdas: every lambda must be > 0")
        if any(not s >= 0 for s in self.sigma_over_lambda):
            problems.append("noise.sigma_over_lambda: values must be >= 0")
        if self.noise_family not in ("uniform", "gaussian"):
            problems.append(f"noise.family: unknown family {self.noise_family!r}")
        for m in self.methods:
            if m not in METHODS:
                problems.append(f"run.methods: unknown method {m!r} (choose from {', '.join(METHODS)})")
        if not self.methods:
            problems.append("run.methods: at least one method required")
        if self.trials < 1:
            problems.append("run.trials: must be >= 1")
        if self.signal.policy not in ("fixed", "per_trial"):
            problems.append("signal.policy: must be 'fixed' or 'per_trial'")
        if self.signal.nc < 0 or not self.signal.t_nyq > 0 or self.signal.margin < 0:
            problems.append("signal: need nc >= 0, t_nyq > 0, margin >= 0")
        if self.asin_carrier_multiple < 0:
            problems.append("asin.carrier_multiple: must be >= 0")
        if not 0 < self.hilbert_carrier_fraction <= 0.5:
            problems.append("hilbert.carrier_fraction: must lie in (0, 0.5]")
        if not self.hilbert_mu > 0:
            problems.append("hilbert.mu: must be > 0")
        if self.hod_order != "auto" and not (isinstance(self.hod_order, int) and 1 <= self.hod_order <= 6):
            problems.append("hod.order: 'auto' or an integer in [1, 6]")
        if self.bits is not None and self.bits < 1:
            problems.append("quantizer.bits: must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def record_multiple(self) -> int:
        """Record length multiple that puts the Hilbert carrier on a DFT bin."""
        if "hilbert" not in self.methods:
            return 1
        return Fraction(self.hilbert_carrier_fraction).limit_denominator(64).denominator


@dataclass(frozen=True)
class ResultRecord:
    method: str
    of: float
    lam: float
    sigma_over_lambda: float
    trial: int
    nmse_db: Optional[float]
    clamp_count: int = 0
    skip_reason: str = ""


@dataclass(frozen=True)
class SummaryRow:
    method: str
    of: float
    lam: float
    sigma_over_lambda: float
    mean_nmse_db: float
    median_nmse_db: float
    trials: int
    skipped: int


def record_grid(model, spec: ExperimentSpec, of: float) -> SamplingGrid:
    s = spec.signal
    half = (s.nc + s.margin) * s.t_nyq
    return SamplingGrid.covering(-half, half, s.t_nyq / of, spec.record_multiple)


def _run_method(method: str, model, c: float, grid: SamplingGrid, lam: float, noise: NoiseSpec,
                spec: ExperimentSpec) -> tuple[np.ndarray, int]:
    """Run one front end + recovery; returns (estimate, clamp count)."""
    quant = QuantizerSpec.symmetric(spec.bits, lam) if spec.bits else None
    omega_m = math.pi / spec.signal.t_nyq

    def acquire(stream: SampleStream) -> SampleStream:
        stream = add_noise(stream, noise)
        return quantize(stream, quant) if quant else stream

    if method == "asin":
        pm = PmConfig(spec.asin_carrier_multiple * grid.rate, math.pi / (2 * c), lam)
        y = acquire(pm_modulate(model, pm, grid))
        rep = dpd_asin(y, pm, rescale_bound(noise, spec.gaussian_factor))
        return rep.values, rep.clamp_count
    if method == "hilbert":
        pm = PmConfig(spec.hilbert_carrier_fraction * grid.rate, spec.hilbert_mu, lam)
        y = acquire(pm_modulate(model, pm, grid))
        bw = carson_bandwidth(model, pm.mu, omega_m)
        rep = dpd_hilbert(y, pm, omega_m, denoise=spec.hilbert_denoise, bandwidth=bw)
        return rep.values, 0
    if method == "hod":
        y = acquire(modulo_fold(model, lam, grid))
        of = grid.oversampling(omega_m)
        sigma = noise.scale * (3.0 if noise.family == "gaussian" else 1.0)
        order = spec.hod_order if spec.hod_order != "auto" else choose_order(of, sigma, max(c, lam), lam)
        cfg = HodConfig(order, lam, max(c, lam), strict=noise.scale == 0 and quant is None)
        return hod_unfold(y, cfg), 0
    if method == "attenuate":
        gain = min(1.0, lam / c)
        y = acquire(sample(attenuate(model, gain), grid))
        return y.values / gain, 0
    if method == "direct":
        y = add_noise(sample(model, grid), noise)
        if spec.bits:
            y = quantize(y, QuantizerSpec.symmetric(spec.bits, c))
        return y.values, 0
    raise ConfigError(f"unknown method {method!r}")


def _trial(spec: ExperimentSpec, trial: int) -> list[ResultRecord]:
    model = spec.signal.build(spec.master_seed, trial)
    c = amplitude_bound(model)
    rows = []
    for i_of, of in enumerate(spec.oversampling):
        grid = record_grid(model, spec, of)
        truth = model(grid.times)
        for i_lam, lam in enumerate(spec.lambdas):
            for i_sig, sol in enumerate(spec.sigma_over_lambda):
                noise = NoiseSpec(spec.noise_family, sol * lam,
                                  derive_seed(spec.master_seed, _NOISE_STREAM, trial, i_of, i_lam, i_sig))
                for method in spec.methods:
                    try:
                        est, clamps = _run_method(method, model, c, grid, lam, noise, spec)
                        if not np.all(np.isfinite(est)):
                            raise DemodError("non-finite estimate")
                        rows.append(ResultRecord(method, of, lam, sol, trial,
                                                 nmse_db(truth, est).db, clamps))
                    except (DemodError, UnfoldingError) as exc:
                        rows.append(ResultRecord(method, of, lam, sol, trial, None, 0, str(exc)))
    return rows


def _order_key(spec: ExperimentSpec):
    m_idx = {m: i for i, m in enumerate(spec.methods)}
    of_idx = {v: i for i, v in enumerate(spec.oversampling)}
    lam_idx = {v: i for i, v in enumerate(spec.lambdas)}
    sig_idx = {v: i for i, v in enumerate(spec.sigma_over_lambda)}
    return lambda r: (m_idx[r.method], lam_idx[r.lam], sig_idx[r.sigma_over_lambda], of_idx[r.of], r.trial)


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> list[ResultRecord]:
    """Run every (trial, OF, lambda, sigma, method) cell.

    Rows come back in a fixed order (method, lambda, sigma, OF, trial)
    regardless of ``workers``. Failing cells are kept as rows with a
    ``skip_reason``. When ``spec.output`` is set the raw CSV and a
    ``.summary.csv`` next to it are written.
    """
    spec.validate()
    # precondition warnings would repeat once per cell; failures land in skip_reason
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                chunks = list(pool.map(lambda k: _trial(spec, k), range(spec.trials)))
        else:
            chunks = [_trial(spec, k) for k in range(spec.trials)]
    records = sorted((r for chunk in chunks for r in chunk), key=_order_key(spec))
    if spec.output:
        out = Path(spec.output)
        emit_csv(records, out)
        emit_summary(summarize(records), out.with_suffix(".summary.csv"))
    return records


def summarize(records: Sequence[ResultRecord]) -> list[SummaryRow]:
    cells: dict = {}
    for r in records:
        cells.setdefault((r.method, r.of, r.lam, r.sigma_over_lambda), []).append(r)
    rows = []
    for (method, of, lam, sol), rs in cells.items():
        ok = [r.nmse_db for r in rs if r.nmse_db is not None]
        rows.append(SummaryRow(method, of, lam, sol,
                               mean_nmse_db(ok) if ok else float("nan"),
                               float(np.median(ok)) if ok else float("nan"),
                               len(rs), len(rs) - len(ok)))
    return rows


def summary_table(records: Sequence[ResultRecord]) -> dict:
    """``{(method, of, lam, sigma_over_lambda): SummaryRow}``."""
    return {(s.method, s.of, s.lam, s.sigma_over_lambda): s for s in summarize(records)}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def emit_csv(records: Sequence[ResultRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([r.method, _fmt(float(r.of)), _fmt(float(r.lam)), _fmt(float(r.sigma_over_lambda)),
                        r.trial, _fmt(r.nmse_db), r.clamp_count, r.skip_reason])


def read_csv(path) -> list[ResultRecord]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRecord(row["method"], float(row["of"]), float(row["lambda"]),
                             float(row["sigma_over_lambda"]), int(row["trial"]),
                             float(row["nmse_db"]) if row["nmse_db"] else None,
                             int(row["clamp_count"]), row["skip_reason"])
                for row in reader]


def emit_summary(rows: Sequence[SummaryRow], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("# B2R2 unfolding is not simulated; its reported noiseless threshold is OF > 25\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in rows:
            w.writerow([s.method, _fmt(float(s.of)), _fmt(float(s.lam)), _fmt(float(s.sigma_over_lambda)),
                        _fmt(s.mean_nmse_db), _fmt(s.median_nmse_db), s.trials, s.skipped])


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


def _floats(section, key, raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a list of numbers, got {raw!r}") from None


def load_config(path) -> ExperimentSpec:
    """Read an INI-style experiment file.

    Sections mirror the ExperimentSpec fields: ``[signal]``, ``[grid]``, ``[frontend]``,
    ``[noise]``, ``[asin]``, ``[hilbert]``, ``[hod]``, ``[quantizer]``,
    ``[run]``. Unknown sections or keys are rejected.
    """
    parser = configparser.ConfigParser()
    try:
        with Path(path).open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return spec_from_parser(parser)


def spec_from_parser(parser: configparser.ConfigParser) -> ExperimentSpec:
    layout = {
        "signal": {"nc", "t_nyq", "mean", "variance", "seed", "policy", "margin"},
        "grid": {"oversampling"},
        "frontend": {"lambdas"},
        "noise": {"family", "sigma_over_lambda", "gaussian_factor"},
        "asin": {"carrier_multiple"},
        "hilbert": {"mu", "carrier_fraction", "denoise"},
        "hod": {"order"},
        "quantizer": {"bits"},
        "run": {"methods", "trials", "seed", "output"},
    }
    for section in parser.sections():
        if section not in layout:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in layout[section]:
                raise ConfigError(f"{section}.{key}: unknown key")

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: cannot interpret {raw!r}") from None

    def as_bool(raw: str) -> bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)

    base = SignalSpec()
    signal = SignalSpec(
        nc=get("signal", "nc", int, base.nc),
        t_nyq=get("signal", "t_nyq", float, base.t_nyq),
        mean=get("signal", "mean", float, base.mean),
        variance=get("signal", "variance", float, base.variance),
        seed=get("signal", "seed", int, base.seed),
        policy=get("signal", "policy", str, base.policy),
        margin=get("signal", "margin", float, base.margin),
    )
    d = ExperimentSpec()
    order = get("hod", "order", str, "auto")
    if order != "auto":
        try:
            order = int(order)
        except ValueError:
            raise ConfigError(f"hod.order: expected 'auto' or an integer, got {order!r}") from None
    bits = get("quantizer", "bits", str, "none")
    try:
        bits = None if bits.lower() in ("", "none") else int(bits)
    except ValueError:
        raise ConfigError(f"quantizer.bits: expected an integer or 'none', got {bits!r}") from None
    spec = ExperimentSpec(
        signal=signal,
        oversampling=get("grid", "oversampling", lambda r: _floats("grid", "oversampling", r), d.oversampling),
        lambdas=get("frontend", "lambdas", lambda r: _floats("frontend", "lambdas", r), d.lambdas),
        sigma_over_lambda=get("noise", "sigma_over_lambda",
                              lambda r: _floats("noise", "sigma_over_lambda", r), d.sigma_over_lambda),
        noise_family=get("noise", "family", str, d.noise_family),
        gaussian_factor=get("noise", "gaussian_factor", float, d.gaussian_factor),
        methods=get("run", "methods", lambda r: tuple(r.replace(",", " ").split()), d.methods),
        trials=get("run", "trials", int, d.trials),
        master_seed=get("run", "seed", int, d.master_seed),
        output=get("run", "output", str, d.output),
        asin_carrier_multiple=get("asin", "carrier_multiple", int, d.asin_carrier_multiple),
        hilbert_mu=get("hilbert", "mu", float, d.hilbert_mu),
        hilbert_carrier_fraction=get("hilbert", "carrier_fraction", float, d.hilbert_carrier_fraction),
        hilbert_denoise=get("hilbert", "denoise", as_bool, d.hilbert_denoise),
        hod_order=order,
        bits=bits,
    )
    spec.validate()
    return spec


def spec_to_config(spec: ExperimentSpec) -> str:
    """Render ``spec`` in the config file format (inverse of ``load_config``)."""
    s = spec.signal
    join = lambda xs: ", ".join(repr(float(x)) for x in xs)  # noqa: E731
    lines = [
        "[signal]", f"nc = {s.nc}", f"t_nyq = {s.t_nyq!r}", f"mean = {s.mean!r}",
        f"variance = {s.variance!r}", f"seed = {s.seed}", f"policy = {s.policy}", f"margin = {s.margin!r}",
        "", "[grid]", f"oversampling = {join(spec.oversampling)}",
        "", "[frontend]", f"lambdas = {join(spec.lambdas)}",
        "", "[noise]", f"family = {spec.noise_family}", f"sigma_over_lambda = {join(spec.sigma_over_lambda)}",
        f"gaussian_factor = {spec.gaussian_factor!r}",
        "", "[asin]", f"carrier_multiple = {spec.asin_carrier_multiple}",
        "", "[hilbert]", f"mu = {spec.hilbert_mu!r}", f"carrier_fraction = {spec.hilbert_carrier_fraction!r}",
        f"denoise = {'true' if spec.hilbert_denoise else 'false'}",
        "", "[hod]", f"order = {spec.hod_order}",
        "", "[quantizer]", f"bits = {spec.bits if spec.bits else 'none'}",
        "", "[run]", f"methods = {', '.join(spec.methods)}", f"trials = {spec.trials}",
        f"seed = {spec.master_seed}",
    ]
    if spec.output:
        lines.append(f"output = {spec.output}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# ECG study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EcgSummary:
    path: str
    bits: int
    nmse_db: float
    clip_count: int
    design_bound: float
    mu: Optional[float] = None


def run_ecg(record, baseline_amplitude: float = 0.5, baseline_freq: float = 0.07,
            path: str = "pm", bits: int = 8, lam: float = 1.0, expected_rate: float = 500.0,
            carrier_multiple: int = 0) -> EcgSummary:
    """Quantize an ECG record with an added sinusoidal baseline.

    The design bound is ``c = max|ecg| + |A_bl|`` (1.5 for the defaults).
    ``direct`` quantizes the composite over [-c, c]; ``pm`` quantizes
    ``lam sin(mu f)`` over [-lam, lam] with ``mu = pi / (2c)`` and inverts
    with asin. NMSE is measured against the unquantized composite.
    """
    if not isinstance(record, BaselinedRecord):
        record = load_record_csv(record, expected_rate)
    rec = record.with_baseline(baseline_amplitude, baseline_freq)
    grid = SamplingGrid.uniform(rec.t0, 1.0 / rec.rate, len(rec.samples))
    truth = rec.sampled()
    c = float(np.max(np.abs(rec.samples))) + abs(baseline_amplitude)
    if path == "direct":
        q = quantize(SampleStream(grid, truth), QuantizerSpec.symmetric(bits, c))
        return EcgSummary(path, bits, nmse_db(truth, q.values).db, q.meta["clip_count"], c)
    if path != "pm":
        raise ValueError(f"unknown path {path!r}; use 'pm' or 'direct'")
    pm = PmConfig(carrier_multiple * grid.rate, math.pi / (2 * c), lam)
    y = pm_modulate(rec, pm, grid)
    q = quantize(y, QuantizerSpec.symmetric(bits, lam))
    rep = dpd_asin(q, pm, 0.0, amplitude=c)
    return EcgSummary(path, bits, nmse_db(truth, rep.values).db, q.meta["clip_count"], c, pm.mu)


__all__ = [
    "ExperimentSpec", "SignalSpec", "ResultRecord", "SummaryRow", "ConfigError", "run_sweep",
    "summarize", "summary_table", "emit_csv", "read_csv", "emit_summary", "load_config",
    "spec_to_config", "run_ecg", "EcgSummary", "derive_seed", "record_grid",
]
