"""Run every sweep in configs/ and write raw + summary CSVs to results/."""
import argparse
import time
from dataclasses import replace
from pathlib import Path

from pmadc.harness import load_config, run_sweep, summarize

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = sorted((ROOT / "configs").glob("*.ini"))
    if args.names:
        configs = [c for c in configs if c.stem in args.names]
    for path in configs:
        spec = replace(load_config(path), output=str(out_dir / f"{path.stem}.csv"))
        if args.trials:
            spec = replace(spec, trials=args.trials)
        t0 = time.perf_counter()
        records = run_sweep(spec, workers=args.workers)
        print(f"== {path.stem} ({len(records)} rows, {time.perf_counter() - t0:.1f} s)")
        for row in summarize(records):
            print(f"   {row.method:9s} OF={row.of:<4g} lambda={row.lam:<5g} "
                  f"sigma/lambda={row.sigma_over_lambda:<4g} {row.mean_nmse_db:9.2f} dB "
                  f"skipped {row.skipped}/{row.trials}")


if __name__ == "__main__":
    main()
