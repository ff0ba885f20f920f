"""Raw class diagnostics for the 12-symbol battery, used to place the verdict thresholds.

For each symbol: fitted h of the derivative ladder, fitted STFT decay rate,
and the normalized sup-norm used by the modulation-space verdict at q = inf
and q = 1.  Thresholds in force are printed alongside.
"""
import argparse
import math

from bipdo.batteries import class_battery, gaussian_window, self_dual_grid
from bipdo.symbols import (ClassThresholds, GevreyClassSpec, evaluate_plan, gamma_norm_estimate,
                           make_sampling_plan, modspace_verdict, stft_class_check)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--points", type=int, default=32)
    ap.add_argument("--batch", type=int, default=10_000)
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = self_dual_grid(args.points, 3)
    th, spec = ClassThresholds(), GevreyClassSpec()
    window = gaussian_window(grid)
    plan = make_sampling_plan(grid, batch=args.batch, seed=args.seed)
    print(f"N={args.points}  h_max={th.h_max(grid):.3f}  r_min={th.r_min}  "
          f"guard=exp({th.mod_rate}*{th.guard_phi(grid):.2f})={math.exp(th.mod_rate * th.guard_phi(grid)):.3g}")
    print(f"{'symbol':18s} {'label':6s} {'h_fit':>7s} {'rate':>7s} {'mod q=inf':>10s} {'mod q=1':>10s}")
    for case in class_battery(grid):
        g = gamma_norm_estimate(case.symbol, spec, K=args.K, h_max=th.h_max(grid))
        vals = evaluate_plan(case.symbol, window, plan, spec.weight)
        st = stft_class_check(case.symbol, window, spec, values=vals, r_min=th.r_min)
        mi = modspace_verdict(case.symbol, window, spec, math.inf, th.mod_rate, vals, th.guard_phi(grid))
        m1 = modspace_verdict(case.symbol, window, spec, 1.0, th.mod_rate, vals, th.guard_phi(grid))
        print(f"{case.name:18s} {'in' if case.in_class else 'out':6s} {g.h_fit:7.3f} {st.common_rate:7.3f} "
              f"{mi.normalized:10.3g} {m1.normalized:10.3g}", flush=True)


if __name__ == "__main__":
    main()
