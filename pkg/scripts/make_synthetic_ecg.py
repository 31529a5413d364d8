"""Write a synthetic single-channel ECG record (500 Hz CSV) for the ECG study.

Usage: python scripts/make_synthetic_ecg.py [--out data/synthetic_ecg.csv] [--seed 0]
"""
import argparse
from pathlib import Path

from pmadc.signals import synthetic_ecg, write_record_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "synthetic_ecg.csv"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--heart-rate", type=float, default=72.0)
    args = ap.parse_args()
    x = synthetic_ecg(args.duration, 500.0, args.heart_rate, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_record_csv(args.out, x, 500.0)
    print(f"wrote {len(x)} samples to {args.out}")


if __name__ == "__main__":
    main()
