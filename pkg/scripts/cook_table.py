"""Tip displacement table for Cook's membrane over mesh families and sizes.

    python3 scripts/cook_table.py [--families quad voronoi] [--hs 0.5 0.25] [--out table.csv]
"""

import argparse
import csv
import sys
import time

from vemstab.assembly import ConvergenceError, NumericalFailure
from vemstab.config import StabilizationConfig
from vemstab.cook import FAMILIES, run_cook


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--families", nargs="+", default=list(FAMILIES), choices=FAMILIES)
    ap.add_argument("--hs", nargs="+", type=float, default=[0.5, 0.25, 0.125, 0.0625])
    ap.add_argument("--modes", nargs="+", default=["classical", "decoupled"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    rows = []
    for family in args.families:
        for mode in args.modes:
            for h in args.hs:
                t0 = time.perf_counter()
                try:
                    res = run_cook(family, h, StabilizationConfig(mode), seed=args.seed)
                    tip, cells, status = res.tip_uy, res.mesh.n_cells, "ok"
                except (ConvergenceError, NumericalFailure) as exc:
                    tip, cells, status = float("nan"), -1, type(exc).__name__
                rows.append([family, mode, h, cells, tip, time.perf_counter() - t0, status])
                print(f"{family:8s} {mode:10s} h={h:<7g} cells={cells:4d} tip_uy={tip:.4f} "
                      f"({rows[-1][5]:.1f}s) {status}", flush=True)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["family", "stab", "h", "cells", "tip_uy", "seconds", "status"])
    w.writerows(rows)
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
