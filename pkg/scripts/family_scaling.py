"""Log-log slope of D_max against epsilon for the three qubit families.

Prints per-point values and the fitted slope.  The dephasing column is
checked against the exact value sqrt(2p - p^2).
"""

import argparse
import math

import numpy as np

from nohair.linalg import SeededRng
from nohair.tradeoff import scaling_fit

FAMILIES = ("depolarizing", "dephasing", "amplitude_damping")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lo", type=float, default=1e-3)
    ap.add_argument("--hi", type=float, default=1e-1)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = np.logspace(math.log10(args.lo), math.log10(args.hi), args.points)
    for fam in FAMILIES:
        fit = scaling_fit(fam, grid, rng=SeededRng(args.seed))
        print(f"\n{fam}: slope {fit.slope:.4f}, intercept {fit.intercept:.4f}, r^2 {fit.r_squared:.6f}")
        print(f"{'p':>10} {'eps_upper':>12} {'dmax':>12} {'D^2/8eps':>9}")
        for pt in fit.points:
            line = f"{pt.param:10.5f} {pt.epsilon_upper:12.8f} {pt.dmax_lower:12.8f} {pt.ratio:9.4f}"
            if fam == "dephasing":
                line += f"   exact {math.sqrt(2 * pt.param - pt.param**2):.8f}"
            print(line)


if __name__ == "__main__":
    main()
