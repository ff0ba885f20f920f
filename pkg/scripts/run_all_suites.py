"""Run every verification suite and write one JSON report per suite.

    python3 scripts/run_all_suites.py --out reports
    python3 scripts/run_all_suites.py --suites fourier stft --workers 2
"""
import argparse
import json
import sys
from pathlib import Path

from bipdo.suites import SUITES, run_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="reports")
    ap.add_argument("--suites", nargs="*", default=list(SUITES), choices=SUITES)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in args.suites:
        res = run_suite(name, workers=args.workers)
        (out / f"{name}.json").write_text(json.dumps(res.to_json(), indent=2, sort_keys=True) + "\n")
        failed = [c["case"] for c in res.cases if not c["pass"]]
        print(f"{name:18s} {'pass' if res.passed else 'FAIL'}  {len(res.cases):3d} cases  {res.wall_time:7.1f} s"
              + (f"  failed: {', '.join(failed)}" if failed else ""), flush=True)
        ok &= res.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
