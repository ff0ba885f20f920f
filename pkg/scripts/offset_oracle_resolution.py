"""The x*xi offset from the dense-matrix oracle against grid size.

Converting x*xi from (1/2, 0) to (0, 0) should give x*xi - i/2.  Small grids
do not resolve the Gaussian test functions, which is why the suite runs the
oracle at N = 64.
"""
import argparse

import numpy as np

from bipdo.lattice import GridSpec, SampledField
from bipdo.quantization import offset_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--points", type=int, nargs="*", default=[16, 32, 64])
    ap.add_argument("--half-width", type=float, default=10.0)
    args = ap.parse_args()

    for n in args.points:
        grid = GridSpec.uniform(args.half_width, n, 1)
        x = grid.coords(0)
        g = SampledField(grid, np.exp(-(x**2) / 2) + 0j)
        tests = [SampledField(grid, np.exp(-((x - c) ** 2) / 2 + 1j * m * x))
                 for c, m in [(0, 0), (0.5, 0.3), (-0.7, -0.5), (1, 1)]]
        res = offset_oracle(grid, g, tests)
        print(f"N={n:3d}  offset={res.offset:.3e}  |error|={abs(res.offset + 0.5j):.2e}  "
              f"residual={res.residual:.2e}  sign={res.accepted_sign:+d}")


if __name__ == "__main__":
    main()
