"""Successive refinement and scalable coding on the bundled problem files.

The triple is physically degraded (Y1 noisier than Y2 noisier than Y3), so
the three-stage corner is exact.  Receiver 2 already recovers all of X,
so the last threshold does not move with D3.  The scalable pair has receiver 2 asking
for a coarsening of what receiver 1 asks for.

    python3 demos/refinement_regions.py
"""
from pathlib import Path

from clnrd import OptOptions, parse_problem, theorem5_region, theorem6_region

HERE = Path(__file__).parent / "problems"


def main():
    opts = OptOptions(restarts=4, seed=0)

    triple = parse_problem(HERE / "degraded_triple.json")
    for d3 in (0.0, 0.1):
        rep = theorem5_region(triple, d3, opts)
        c = rep.corner if rep.exact else rep.inner
        print(f"D3={d3}: exact={rep.exact} thresholds (R1, R1+R2, R1+R2+R3) =",
              tuple(round(t, 4) for t in c.thresholds))

    pair = parse_problem(HERE / "scalable_pair.json")
    rep = theorem6_region(pair, opts)
    print(f"scalable case {rep.case}: thresholds (R12+R1, R12+R2) =",
          tuple(round(t, 4) for t in rep.corner.thresholds))


if __name__ == "__main__":
    main()
