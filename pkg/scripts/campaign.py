"""Run a verification campaign and print the tightest instances.

    python3 scripts/campaign.py configs/campaign.json --out runs/campaign --workers 4
"""

import argparse
import csv
import sys
from pathlib import Path

from nohair import cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path, default=Path("runs/campaign"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--top", type=int, default=5)
    args = ap.parse_args()

    code = cli.main(["verify", "--config", str(args.config), "--out", str(args.out), "--workers", str(args.workers)])
    if code not in (cli.EXIT_OK, cli.EXIT_FAIL):
        return code
    with open(args.out / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: float(r["ratio"]), reverse=True)
    print(f"{'stream':>6} {'dim_bh':>6} {'eps_upper':>12} {'dmax':>10} {'D^2/8eps':>9} {'pivot':>9}")
    for r in rows[: args.top]:
        print(
            f"{r['stream_id']:>6} {r['dim_bh']:>6} {float(r['eps_upper']):12.6f} {float(r['dmax_lower']):10.6f}"
            f" {float(r['ratio']):9.4f} {float(r['pivot_radius']):9.6f}"
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
