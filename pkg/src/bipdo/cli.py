"""Command-line entry point.

Every numeric parameter comes from a JSON config file; flags only pick the
config and override the seed, output directory and worker cap.

Exit codes: 0 pass, 1 numeric failure, 2 usage, 3 I/O.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .fieldio import FieldFormatError, header_path, read_field, write_field
from .lattice import GridError, GridSpec, SampledField
from .quantization import InadmissiblePairError
from .timefreq import DegenerateInputError

EXIT_PASS, EXIT_NUMERIC, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("bipdo")


class UsageError(Exception):
    pass


class Outputs:
    """Tracks written files so a failed run leaves nothing half-written behind."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = Path(name)
        p = p if p.is_absolute() else self.dir / p
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def field(self, name: str, f: SampledField, **extra) -> Path:
        p = self.path(name)
        self.written += [p, header_path(p)]
        write_field(p, f, **extra)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.path(name)
        self.written.append(p)
        p.write_text(dumps(obj))
        return p

    def rollback(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def dumps(obj) -> str:
    def enc(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(f"not serializable: {type(o).__name__}")

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True, default=enc) + "\n"


def load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"{p}: {exc.strerror or exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: config is not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{p}: config must be a JSON object")
    cfg.setdefault("_base", str(p.parent))
    return cfg


def _req(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"config is missing required key {key!r}")
    return cfg[key]


def _in_path(cfg: dict, key: str) -> Path:
    p = Path(_req(cfg, key))
    if not p.is_absolute():
        p = Path(cfg.get("_base", ".")) / p
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


def _read(cfg: dict, key: str) -> SampledField:
    return read_field(_in_path(cfg, key))[0]


def _pair(v):
    from .quantization import QuantizationPair

    return QuantizationPair.parse(v)


def _window(cfg: dict, grid: GridSpec) -> SampledField:
    from .batteries import gaussian_window

    if "window" in cfg:
        return _read(cfg, "window")
    return gaussian_window(grid, float(cfg.get("window_width", 1.0)))


# ---------------------------------------------------------------- commands


def cmd_stft(cfg: dict, out: Outputs, args) -> int:
    from .timefreq import stft

    f = _read(cfg, "input")
    phi = _window(cfg, f.grid)
    V = stft(f, phi)
    out.field(cfg.get("output", "stft.bin"), V.base, window_id=V.window_id)
    for i, sl in enumerate(cfg.get("csv_slices", [])):
        axis = sl.get("axis", "x")
        at = float(sl.get("at", 0.0))
        X, XI = V.grid.coords(0), V.grid.coords(1)
        if f.rank != 1:
            raise UsageError("CSV slices are supported for one-axis inputs")
        if axis == "x":  # |V| along x at the nearest xi
            k = int(np.argmin(np.abs(XI - at)))
            rows = zip(X, np.abs(V.values[:, k]))
        elif axis == "xi":
            j = int(np.argmin(np.abs(X - at)))
            rows = zip(XI, np.abs(V.values[j, :]))
        else:
            raise UsageError(f"slice axis must be 'x' or 'xi', got {axis!r}")
        p = out.path(sl.get("output", f"slice{i}.csv"))
        out.written.append(p)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis", "value", "modulus"])
            for v, m in rows:
                w.writerow([axis, repr(float(v)), repr(float(m))])
    return EXIT_PASS


def cmd_convert(cfg: dict, out: Outputs, args) -> int:
    from .quantization import convert_symbol

    a = _read(cfg, "input")
    p_from, p_to = _pair(_req(cfg, "from")), _pair(_req(cfg, "to"))
    b = convert_symbol(a, p_from, p_to)
    out.field(cfg.get("output", "converted.bin"), b, pair=p_to.to_json())
    return EXIT_PASS


def cmd_apply(cfg: dict, out: Outputs, args) -> int:
    from .quantization import apply_bilinear, apply_linear

    a = _read(cfg, "symbol")
    f = _read(cfg, "f")
    if a.rank == 2:
        res = apply_linear(a, float(cfg.get("t", 0.0)), f, pathway=cfg.get("pathway", "fft"))
    else:
        g = _read(cfg, "g")
        res = apply_bilinear(a, _pair(cfg.get("pair", [0, 0])), f, g, pathway=cfg.get("pathway", "kn"))
    out.field(cfg.get("output", "applied.bin"), res)
    return EXIT_PASS


def cmd_modnorm(cfg: dict, out: Outputs, args) -> int:
    from .timefreq import MixedExponents, modulation_norm
    from .weights import WeightModel

    f = _read(cfg, "input")
    phi = _window(cfg, f.grid)
    w = WeightModel.from_json(cfg["weight"]) if "weight" in cfg else None
    pq = MixedExponents.parse(cfg.get("p", 2), cfg.get("q", cfg.get("p", 2)))
    val = modulation_norm(f, phi, w, pq)
    out.json(cfg.get("output", "modnorm.json"), {"norm": val, "pq": pq.to_json(),
                                                  "weight": w.to_json() if w else None})
    return EXIT_PASS


def cmd_classify(cfg: dict, out: Outputs, args) -> int:
    from .batteries import gaussian_window
    from .symbols import (ClassThresholds, GevreyClassSpec, evaluate_plan, gamma_norm_estimate,
                          make_sampling_plan, stft_class_check)

    a = _read(cfg, "symbol")
    spec = GevreyClassSpec.from_json(cfg.get("spec", {}))
    th = ClassThresholds(**cfg.get("thresholds", {}))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    g = gamma_norm_estimate(a, spec, K=int(cfg.get("K", 4)), h_max=th.h_max(a.grid))
    plan = make_sampling_plan(a.grid, batch=int(cfg.get("batch", 10_000)), seed=seed)
    window = gaussian_window(a.grid, float(cfg.get("window_width", 1.0)))
    st = stft_class_check(a, window, spec, values=evaluate_plan(a, window, plan, spec.weight), r_min=th.r_min)
    report = {"spec": spec.to_json(), "thresholds": th.to_json(), "seed": seed,
              "derivative": g.to_json(), "stft_decay": st.to_json(),
              "pass": bool(g.passed and st.passed), "h_fit": g.h_fit}
    out.json(cfg.get("output", "classify.json"), report)
    return EXIT_PASS


def cmd_smooth_weight(cfg: dict, out: Outputs, args) -> int:
    from .weights import WeightModel, fit_derivative_bound, ratio_bound, smooth_weight

    w = WeightModel.from_json(_req(cfg, "weight"))
    grid = GridSpec.from_pairs(_req(cfg, "grid"))
    s = cfg.get("s", [0.5])
    s = s if isinstance(s, list) else [s]
    region = cfg.get("region")
    w0 = smooth_weight(w, s, grid, region=region)
    region = region if region is not None else min(ax.half_width for ax in grid.axes) - 4.0
    rep = fit_derivative_bound(w, s, grid, max_order=int(cfg.get("max_order", 2)), region=region)
    out.field(cfg.get("output", "smoothed.bin"), w0)
    out.json(cfg.get("report", "smooth_weight.json"),
             {"C": ratio_bound(w0, w, region), "region": region, "derivatives": rep.to_json()})
    return EXIT_PASS


def cmd_verify(cfg: dict, out: Outputs, args) -> int:
    from .suites import run_suite

    overrides = {k: v for k, v in cfg.items() if not k.startswith("_") and k != "output"}
    if args.seed is not None:
        overrides["seed"] = args.seed
    res = run_suite(args.suite, overrides, workers=args.workers)
    out.json(cfg.get("output", f"{args.suite}.json"), res.to_json())
    if args.timing:
        out.json(f"{args.suite}.timing.json", {"suite": args.suite, "wall_time": res.wall_time})
    log.info("%s: %s in %.1f s", args.suite, "pass" if res.passed else "FAIL", res.wall_time)
    return EXIT_PASS if res.passed else EXIT_NUMERIC


COMMANDS = {
    "stft": cmd_stft,
    "convert": cmd_convert,
    "apply": cmd_apply,
    "modnorm": cmd_modnorm,
    "classify": cmd_classify,
    "smooth-weight": cmd_smooth_weight,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    from .suites import SUITES

    p = _Parser(prog="bipdo", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "verify":
            sp.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
            sp.add_argument("--config", help="JSON overrides for the suite config")
            sp.add_argument("--timing", action="store_true", help="also write <suite>.timing.json")
        else:
            sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--workers", type=int, default=1, help="cap on worker processes")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = Outputs(Path(args.out))
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            from .suites import SUITES

            if args.suite not in SUITES:
                raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        return COMMANDS[args.command](cfg, out, args)
    except (UsageError, InadmissiblePairError, KeyError, TypeError) as exc:
        out.rollback()
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, FieldFormatError, OSError) as exc:
        out.rollback()
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GridError, DegenerateInputError, OverflowError, FloatingPointError, ValueError) as exc:
        out.rollback()
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
