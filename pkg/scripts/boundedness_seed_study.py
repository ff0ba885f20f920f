"""How stable is the max boundedness ratio when the atom battery quadruples?

Prints the relative shift of the max ratio from --small to --large atoms for
each seed and each probe configuration.  This is where the thin margin of the
unit configuration (shift 0.25 at seed 3) shows up.
"""
import argparse
import time

from bipdo.lattice import GridSpec
from bipdo.quantization import boundedness_probe
from bipdo.suites import boundedness_configs
from bipdo.symbols import GevreyClassSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seeds", type=int, nargs="*", default=[0, 1, 2, 3, 4, 5])
    ap.add_argument("--configs", nargs="*", default=["unit"])
    ap.add_argument("--small", type=int, default=32)
    ap.add_argument("--large", type=int, default=128)
    ap.add_argument("--points", type=int, default=128)
    ap.add_argument("--half-width", type=float, default=12.0)
    args = ap.parse_args()

    grid = GridSpec.uniform(args.half_width, args.points, 1)
    configs = {c[0]: c for c in boundedness_configs()}
    print("config        seed   max(small)   max(large)   shift   time")
    for name in args.configs:
        _, a, pair, w0, w, pq, R = configs[name]
        for seed in args.seeds:
            t0 = time.perf_counter()
            m = [boundedness_probe(a, pair, GevreyClassSpec(), w0, w, pq, R, n, seed, fgrid=grid).max_ratio
                 for n in (args.small, args.large)]
            print(f"{name:12s} {seed:5d} {m[0]:12.5g} {m[1]:12.5g} {abs(m[1] / m[0] - 1):7.3f} "
                  f"{time.perf_counter() - t0:6.1f}s", flush=True)


if __name__ == "__main__":
    main()
