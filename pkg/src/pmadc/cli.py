"""Command-line entry point ``pm-adc-lab``.

Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .demod import DemodError, dpd_asin, dpd_hilbert
from .frontend import PmConfig, modulo_fold, pm_modulate, read_stream, write_stream
from .harness import ConfigError, load_config, run_ecg, run_sweep, summarize
from .signals import (InvalidParameterError, RecordFormatError, SamplingGrid, SincSeries, Sinusoid,
                      gen_sinc_series)
from .unfold import HodConfig, UnfoldingError, choose_order, hod_unfold

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Model descriptions (key=value text)
# ---------------------------------------------------------------------------


def model_to_text(model) -> str:
    if isinstance(model, SincSeries):
        lines = ["kind=sinc", f"t_nyq={model.nyquist_interval!r}", f"scale={model.scale!r}",
                 "coefficients=" + ",".join(repr(float(c)) for c in model.coefficients)]
        if model.seed is not None:
            lines.insert(1, f"seed={model.seed}")
    elif isinstance(model, Sinusoid):
        lines = ["kind=sinusoid", f"amplitude={model.amplitude!r}", f"omega={model.omega!r}",
                 f"phase={model.phase!r}"]
    else:
        raise CliError(f"cannot describe {type(model).__name__}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str):
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise CliError(f"model line {lineno}: expected key=value")
        fields[key.strip()] = val.strip()
    kind = fields.get("kind")
    try:
        if kind == "sinc":
            coeffs = [float(v) for v in fields["coefficients"].split(",")]
            seed = int(fields["seed"]) if "seed" in fields else None
            return SincSeries(coeffs, float(fields["t_nyq"]), float(fields.get("scale", 1.0)), seed)
        if kind == "sinusoid":
            return Sinusoid(float(fields.get("amplitude", 1.0)), float(fields["omega"]),
                            float(fields.get("phase", 0.0)))
    except KeyError as exc:
        raise CliError(f"model description lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise CliError(f"bad model description: {exc}") from None
    raise CliError(f"unknown model kind {kind!r}")


def _read_model(path: str):
    return model_from_text(Path(path).read_text(encoding="utf-8"))


def _grid_for(model, args) -> SamplingGrid:
    if args.rate_hz:
        interval = 1.0 / args.rate_hz
    else:
        interval = math.pi / model.bandwidth / args.of
    lo, hi = model.span()
    return SamplingGrid.covering(lo, hi, interval, args.multiple)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> None:
    if args.kind == "sinc":
        model = gen_sinc_series(args.seed, args.nc, args.t_nyq, args.mean, args.variance,
                                normalize=not args.raw)
    else:
        model = Sinusoid(args.amplitude, 2 * math.pi * args.freq_hz, args.phase)
    _emit(model_to_text(model), args.out)


def cmd_modulate(args) -> None:
    model = _read_model(args.model)
    grid = _grid_for(model, args)
    pm = PmConfig(2 * math.pi * args.carrier_hz, args.mu, args.lam)
    write_stream(pm_modulate(model, pm, grid), args.out)


def cmd_fold(args) -> None:
    model = _read_model(args.model)
    write_stream(modulo_fold(model, args.lam, _grid_for(model, args)), args.out)


def cmd_demod(args) -> None:
    stream = read_stream(args.input)
    lam = args.lam if args.lam is not None else stream.lam
    if lam is None:
        raise CliError("no lambda in the stream header; pass --lambda")
    pm = PmConfig(2 * math.pi * args.carrier_hz, args.mu, lam)
    if args.method == "asin":
        rep = dpd_asin(stream, pm, args.noise_bound)
    else:
        if args.max_freq_hz is None and args.bandwidth_hz is None:
            raise CliError("hilbert needs --max-freq-hz or --bandwidth-hz")
        omega_m = 2 * math.pi * (args.max_freq_hz if args.max_freq_hz else args.bandwidth_hz)
        bw = 2 * math.pi * args.bandwidth_hz if args.bandwidth_hz else None
        rep = dpd_hilbert(stream, pm, omega_m, denoise=args.denoise, bandwidth=bw, unwrap=args.unwrap)
    out = stream.evolve(rep.values, "recovered", method=rep.method)
    write_stream(out, args.out)
    if rep.clamp_count:
        print(f"clamped={rep.clamp_count}", file=sys.stderr)


def cmd_unfold(args) -> None:
    stream = read_stream(args.input)
    lam = args.lam if args.lam is not None else stream.lam
    if lam is None:
        raise CliError("no lambda in the stream header; pass --lambda")
    if args.order == "auto":
        if args.max_freq_hz is None:
            raise CliError("--order auto needs --max-freq-hz to compute the oversampling factor")
        of = stream.grid.oversampling(2 * math.pi * args.max_freq_hz)
        order = choose_order(of, 0.0, args.beta, lam)
    else:
        try:
            order = int(args.order)
        except ValueError:
            raise CliError(f"--order must be 'auto' or an integer, got {args.order!r}") from None
    values = hod_unfold(stream, HodConfig(order, lam, max(args.beta, lam)))
    write_stream(stream.evolve(values, "recovered", order=order), args.out)
    print(f"order={order}", file=sys.stderr)


def cmd_sweep(args) -> None:
    spec = load_config(args.config)
    changes = {"output": args.out}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["master_seed"] = args.seed
    spec = replace(spec, **changes)
    records = run_sweep(spec, workers=args.workers)
    for row in summarize(records):
        print(f"{row.method:9s} OF={row.of:<5g} lambda={row.lam:<5g} sigma/lambda={row.sigma_over_lambda:<4g} "
              f"mean={row.mean_nmse_db:9.2f} dB  skipped={row.skipped}/{row.trials}")


def cmd_ecg(args) -> None:
    res = run_ecg(args.record, args.baseline_amplitude, args.baseline_freq, args.path, args.bits,
                  args.lam, args.rate_hz)
    print(f"path={res.path}\nbits={res.bits}\nnmse_db={res.nmse_db:.4f}\n"
          f"clip_count={res.clip_count}\ndesign_bound={res.design_bound:.6g}")
    if res.mu is not None:
        print(f"mu={res.mu:.6g}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _positive(conv):
    def parse(raw):
        val = conv(raw)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {raw}")
        return val
    return parse


def _grid_args(p) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--of", type=_positive(float), default=1.0, help="oversampling factor (default 1)")
    g.add_argument("--rate-hz", type=_positive(float), help="sampling rate in Hz")
    p.add_argument("--multiple", type=_positive(int), default=1,
                   help="round the sample count up to this multiple")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pm-adc-lab",
                                     description="Phase-modulation HDR ADC simulation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a signal model description")
    p.add_argument("--kind", choices=("sinc", "sinusoid"), default="sinc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nc", type=int, default=4)
    p.add_argument("--t-nyq", type=_positive(float), default=0.5e-3)
    p.add_argument("--mean", type=float, default=0.5)
    p.add_argument("--variance", type=float, default=4.0)
    p.add_argument("--raw", action="store_true", help="skip peak normalization")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--freq-hz", type=_positive(float), default=1000.0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("modulate", help="sample lambda*sin(wc t + mu f(t))")
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=_positive(float), required=True)
    p.add_argument("--lambda", dest="lam", type=_positive(float), required=True)
    p.add_argument("--carrier-hz", type=float, default=0.0)
    _grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_modulate)

    p = sub.add_parser("fold", help="sample the centered modulo of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda", dest="lam", type=_positive(float), required=True)
    _grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("demod", help="recover samples from a PM stream")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=("asin", "hilbert"), default="asin")
    p.add_argument("--mu", type=_positive(float), required=True)
    p.add_argument("--lambda", dest="lam", type=_positive(float))
    p.add_argument("--carrier-hz", type=float, default=0.0)
    p.add_argument("--noise-bound", type=float, default=0.0)
    p.add_argument("--max-freq-hz", type=_positive(float), help="signal bandwidth (hilbert)")
    p.add_argument("--bandwidth-hz", type=_positive(float), help="Carson bandwidth (hilbert)")
    p.add_argument("--denoise", action="store_true")
    p.add_argument("--unwrap", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_demod)

    p = sub.add_parser("unfold", help="higher-order-difference unfolding of modulo samples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--order", default="auto")
    p.add_argument("--beta", type=_positive(float), required=True, help="bound on |f|")
    p.add_argument("--lambda", dest="lam", type=_positive(float))
    p.add_argument("--max-freq-hz", type=_positive(float))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_unfold)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=_positive(int))
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=_positive(int), default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ecg", help="8-bit ECG quantization study")
    p.add_argument("--record", required=True)
    p.add_argument("--path", choices=("pm", "direct"), default="pm")
    p.add_argument("--bits", type=_positive(int), default=8)
    p.add_argument("--baseline-amplitude", type=float, default=0.5)
    p.add_argument("--baseline-freq", type=float, default=0.07)
    p.add_argument("--lambda", dest="lam", type=_positive(float), default=1.0)
    p.add_argument("--rate-hz", type=_positive(float), default=500.0)
    p.set_defaults(func=cmd_ecg)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(all="ignore"):
            args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (RecordFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, InvalidParameterError, DemodError, UnfoldingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
