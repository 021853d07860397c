"""Stabilization energy of a near-isochoric kernel mode on the unit square versus Poisson ratio.

    python3 scripts/kernel_mode_sweep.py [--seed 0] [--young 200]
"""

import argparse

from vemstab.diagnostics import KERNEL_MODE_NUS, isochoric_kernel_mode


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--young", type=float, default=200.0)
    ap.add_argument("--amplitude", type=float, default=1e-2)
    args = ap.parse_args(argv)

    diag = isochoric_kernel_mode(seed=args.seed, nus=KERNEL_MODE_NUS, young=args.young, amplitude=args.amplitude)
    print(f"projector residual ratio {diag.projector_residual_ratio:.2e}, "
          f"max volume deviation {diag.max_volume_deviation:.3e}")
    cols = ["nu", "E_raw_classic", "E_raw_dec", "E_over_mu_classic", "E_over_mu_dec", "E_over_muhat_classic"]
    print("  ".join(f"{c:>20s}" for c in cols))
    for row in diag.sweep:
        print("  ".join(f"{row[c]:20.10g}" for c in cols))


if __name__ == "__main__":
    main()
