"""Sweep the lower and upper bounds over a grid of receiver-2 distortions.

Prints one row per D2, then checks the lower curve is non-increasing.

    python3 demos/wyner_ziv_sweep.py [problem.json]
"""
import sys
from pathlib import Path

import clnrd
from clnrd import OptOptions, rd_curve_sweep


def main(path=None):
    path = path or Path(clnrd.__file__).parent / "data" / "example2.json"
    inst = clnrd.parse_problem(path)
    grid = [0.0, 0.05, 0.1, 0.15, 0.2]
    rows = rd_curve_sweep(inst, grid, OptOptions(restarts=4, seed=0))
    print(f"{'D2':>5} {'lower':>9} {'upper':>9} {'gap':>9}")
    for r in rows:
        print(f"{r.d2:5.2f} {r.lower_bits:9.5f} {r.upper_bits:9.5f} {r.gap_bits:9.2e}")
    low = [r.lower_bits for r in rows]
    print("non-increasing:", all(b <= a + 1e-9 for a, b in zip(low, low[1:])))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
