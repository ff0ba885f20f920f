"""Per-symbol quantization invariance errors on a grid and its refinement.

The error is the periodization of the symbol and the (f, g) battery, so
halving dx at fixed L should shrink it by far more than the 4x the suite asks.
"""
import argparse

from bipdo.batteries import INVARIANCE_PAIRS, invariance_symbols, pair_battery
from bipdo.lattice import GridSpec
from bipdo.quantization import verify_invariance


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--points", type=int, nargs="*", default=[64, 128])
    ap.add_argument("--half-width", type=float, default=12.0)
    ap.add_argument("--pairs", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    coarse = GridSpec.uniform(args.half_width, args.points[0], 1)
    for a in invariance_symbols():
        row = []
        for n in args.points:
            grid = GridSpec.uniform(args.half_width, n, 1)
            battery = pair_battery(grid, args.pairs, args.seed, param_grid=coarse)
            reps = verify_invariance(a, INVARIANCE_PAIRS, battery, reference="kernel")
            row.append(max(r.rel_error for r in reps))
        print(f"{a.label:12s} " + "  ".join(f"N={n}: {e:.2e}" for n, e in zip(args.points, row)), flush=True)


if __name__ == "__main__":
    main()
