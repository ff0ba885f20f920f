"""Verification suites.  Each suite takes a config dataclass and returns a SuiteResult.

Cases are independent; ``workers > 1`` fans them out over processes.  Case
functions are module-level and take plain arguments so they pickle.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import batteries as bat
from .lattice import GridSpec, SampledField, forward_ft, inverse_ft
from .quantization import (
    ClosedFormSymbol,
    GateRejection,
    QuantizationPair,
    apply_bilinear,
    boundedness_probe,
    convert_symbol,
    gs_continuity_check,
    make_covariance_plan,
    offset_oracle,
    relative_l2,
    stft_covariance_check,
    verify_invariance,
)
from .symbols import (
    ClassThresholds,
    GevreyClassSpec,
    evaluate_plan,
    gamma_norm_estimate,
    make_sampling_plan,
    modspace_verdict,
    stft_class_check,
)
from .timefreq import MixedExponents, mixed_norm, stft, stft_adjoint_invert
from .weights import WeightModel, fit_derivative_bound, ratio_bound, smooth_weight


@dataclass
class SuiteResult:
    suite: str
    cases: list
    passed: bool
    wall_time: float
    config: dict

    def to_json(self, timing: bool = False) -> dict:
        d = {"suite": self.suite, "pass": self.passed, "config": self.config, "cases": self.cases}
        if timing:
            d["wall_time"] = self.wall_time
        return d


def inputs_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _case(name: str, inputs: dict, metrics: dict, passed: bool) -> dict:
    return {"case": name, "inputs_hash": inputs_hash(inputs), "inputs": inputs, "metrics": metrics,
            "pass": bool(passed)}


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*items)))


def _pair_json(p):
    return QuantizationPair.parse(p).to_json()


# ---------------------------------------------------------------- configs


@dataclass
class FourierConfig:
    half_width: float = 12.0
    points: int = 256
    atoms: int = 6
    bandlimited: int = 4
    seed: int = 0
    tolerance: float = 1e-12


@dataclass
class StftConfig:
    half_width: float = 12.0
    points: int = 128
    atoms: int = 4
    random_fields: int = 2
    seed: int = 0
    window_width: float = 1.0
    inversion_tol: float = 1e-9
    moyal_tol: float = 1e-10
    gaussian_tol: float = 1e-9


@dataclass
class WeightsConfig:
    half_width: float = 12.0
    points: int = 256
    s: float = 0.5
    region: float = 6.0
    stability_tol: float = 0.05


@dataclass
class ClassesConfig:
    points: int = 32
    K: int = 4
    batch: int = 10_000
    seed: int = 0
    convert_pairs: list = field(default_factory=lambda: [[0.5, 0.5], [1 / 3, 1 / 3], [0.5, 0.0]])


@dataclass
class InvarianceConfig:
    half_width: float = 12.0
    points: int = 64
    fine_points: int = 128
    pairs_per_symbol: int = 8
    seed: int = 0
    tolerance: float = 1e-7
    min_scaling: float = 4.0


@dataclass
class CovarianceConfig:
    points: int = 48
    plan_points: int = 1000
    seed: int = 0
    pairs: list = field(default_factory=lambda: [[0.0, 0.0], [0.5, 0.5], [1 / 3, 1 / 3]])
    tolerance: float = 1e-8


@dataclass
class OracleConfig:
    half_width: float = 5.0
    points: int = 16
    tolerance: float = 1e-6
    offset_half_width: float = 10.0
    offset_points: int = 64
    offset_tol: float = 1e-8


@dataclass
class BoundednessConfig:
    half_width: float = 12.0
    points: int = 128
    sizes: list = field(default_factory=lambda: [32, 128])
    seed: int = 0
    max_shift: float = 0.25
    guard: float = 1e300


@dataclass
class GsContinuityConfig:
    half_width: float = 12.0
    points: int = 128
    pairs: int = 16
    seed: int = 0
    s: float = 1.0
    sigma: float = 1.0
    r_min: float = 0.1


CONFIGS = {
    "fourier": FourierConfig,
    "stft": StftConfig,
    "weights": WeightsConfig,
    "classes": ClassesConfig,
    "invariance": InvarianceConfig,
    "covariance": CovarianceConfig,
    "oracle-quadrature": OracleConfig,
    "boundedness": BoundednessConfig,
    "gs-continuity": GsContinuityConfig,
}


def make_config(suite: str, overrides: dict | None = None):
    cls = CONFIGS[suite]
    overrides = dict(overrides or {})
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise KeyError(f"unknown {suite} config keys: {sorted(unknown)}")
    return cls(**overrides)


# ---------------------------------------------------------------- fourier


def _bandlimited(grid: GridSpec, rng, terms: int = 5) -> SampledField:
    ax = grid.axes[0]
    kmax = ax.points // 4
    ks = rng.integers(-kmax, kmax, size=terms)
    amps = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    x = ax.coords()
    return SampledField(grid, sum(a * np.exp(1j * k * ax.dual_spacing * x) for a, k in zip(amps, ks)))


def run_fourier(cfg: FourierConfig, workers: int = 1) -> list:
    grid = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    rng = np.random.default_rng(cfg.seed)
    items = [(f"atom{i}", a.sample(grid), a.to_json()) for i, a in enumerate(bat.gaussian_atoms(grid, cfg.atoms, cfg.seed))]
    items += [(f"bandlimited{i}", _bandlimited(grid, rng), {"seed": cfg.seed, "index": i}) for i in range(cfg.bandlimited)]
    cases = []
    for name, f, spec in items:
        F = forward_ft(f)
        inv = relative_l2(inverse_ft(F).values, f.values)
        pars = abs(F.norm() / f.norm() - 1)
        cases.append(_case(name, spec, {"inversion": inv, "parseval": pars},
                           inv <= cfg.tolerance and pars <= cfg.tolerance))
    return cases


# ---------------------------------------------------------------- stft


def run_stft(cfg: StftConfig, workers: int = 1) -> list:
    grid = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    phi = bat.gaussian_window(grid, cfg.window_width)
    rng = np.random.default_rng(cfg.seed)
    items = [(f"atom{i}", a.sample(grid), a.to_json()) for i, a in enumerate(bat.gaussian_atoms(grid, cfg.atoms, cfg.seed))]
    for i in range(cfg.random_fields):
        vals = rng.normal(size=cfg.points) + 1j * rng.normal(size=cfg.points)
        items.append((f"random{i}", SampledField(grid, vals), {"seed": cfg.seed, "index": i}))
    cases = []
    for name, f, spec in items:
        V = stft(f, phi)
        inv = relative_l2(stft_adjoint_invert(V, phi).values, f.values)
        moyal = abs(mixed_norm(V) / (f.norm() * phi.norm()) - 1)
        cases.append(_case(name, spec, {"inversion": inv, "moyal": moyal},
                           inv <= cfg.inversion_tol and moyal <= cfg.moyal_tol))
    # closed form: phi = f = exp(-x^2/2) gives |V| = 2^(-1/2) exp(-(x^2 + xi^2)/4)
    g = SampledField.from_function(grid, lambda x: np.exp(-(x**2) / 2))
    V = stft(g, g)
    X, XI = V.grid.mesh()
    err = float(np.max(np.abs(np.abs(V.values) - np.exp(-(X**2 + XI**2) / 4) / math.sqrt(2))))
    cases.append(_case("gaussian_closed_form", {"width": 1.0}, {"max_abs_error": err}, err <= cfg.gaussian_tol))
    return cases


# ---------------------------------------------------------------- weights


def weight_models() -> dict:
    return {
        "peetre_2": WeightModel.single(1, poly_degree=2.0),
        "exp_1": WeightModel.single(1, exp_rate=1.0),
        "subexp_half_poly": WeightModel((WeightModel.single(1, exp_rate=1.0, inv_exp_power=0.5).groups[0],
                                         WeightModel.single(1, poly_degree=1.0).groups[0]), 1),
        "inverse_exp_half": WeightModel.single(1, exp_rate=-0.8, inv_exp_power=0.5),
    }


def _weight_metrics(w, cfg: WeightsConfig, points: int) -> tuple[float, float]:
    grid = GridSpec.uniform(cfg.half_width, points, 1)
    w0 = smooth_weight(w, [cfg.s], grid, region=cfg.region)
    C = ratio_bound(w0, w, cfg.region)
    rep = fit_derivative_bound(w, [cfg.s], grid, max_order=2, region=cfg.region)
    return C, rep.h_fit, rep.per_order


def run_weights(cfg: WeightsConfig, workers: int = 1) -> list:
    cases = []
    for name, w in weight_models().items():
        C, h, per_order = _weight_metrics(w, cfg, cfg.points)
        C2, h2, _ = _weight_metrics(w, cfg, 2 * cfg.points)
        stable = abs(C / C2 - 1) <= cfg.stability_tol and abs(h / h2 - 1) <= cfg.stability_tol
        metrics = {"C": C, "h_fit": h, "C_refined": C2, "h_fit_refined": h2, "per_order": per_order}
        cases.append(_case(name, {"weight": w.to_json(), "s": cfg.s, "region": cfg.region}, metrics,
                           math.isfinite(C) and math.isfinite(h) and stable))
    return cases


# ---------------------------------------------------------------- classes


def _class_case(index: int, points: int, K: int, batch: int, seed: int, convert_pairs: list) -> list:
    grid = bat.self_dual_grid(points, 3)
    case = bat.class_battery(grid)[index]
    spec = GevreyClassSpec()
    th = ClassThresholds()
    window = bat.gaussian_window(grid)
    plan = make_sampling_plan(grid, batch=batch, seed=seed)
    g = gamma_norm_estimate(case.symbol, spec, K=K, h_max=th.h_max(grid))
    values = evaluate_plan(case.symbol, window, plan, spec.weight)
    st = stft_class_check(case.symbol, window, spec, values=values, r_min=th.r_min)
    mv = modspace_verdict(case.symbol, window, spec, math.inf, th.mod_rate, values, th.guard_phi(grid))
    mv1 = modspace_verdict(case.symbol, window, spec, 1.0, th.mod_rate, values, th.guard_phi(grid))
    verdicts = [g.passed, st.passed, mv.passed]
    inputs = {"symbol": case.name, "points": points, "seed": seed, "thresholds": th.to_json()}
    out = [_case(case.name, inputs, {
        "in_class": case.in_class,
        "derivative": {"h_fit": g.h_fit, "h_max": g.h_max, "pass": g.passed},
        "stft_decay": {"rate": st.common_rate, "r_min": th.r_min, "pass": st.passed},
        "modulation_qinf": mv.to_json(),
        "modulation_q1_reported": mv1.to_json(),
        "agree": len(set(verdicts)) == 1,
    }, len(set(verdicts)) == 1 and verdicts[0] == case.in_class)]
    for p in convert_pairs:
        b = convert_symbol(case.symbol, (0, 0), tuple(p))
        gb = gamma_norm_estimate(b, spec, K=K, h_max=th.h_max(grid))
        out.append(_case(f"{case.name}->{QuantizationPair.parse(p)}", dict(inputs, pair=_pair_json(p)),
                         {"h_fit": g.h_fit, "h_fit_converted": gb.h_fit, "verdict": g.passed,
                          "verdict_converted": gb.passed}, gb.passed == g.passed))
    return out


def run_classes(cfg: ClassesConfig, workers: int = 1) -> list:
    n = len(bat.class_battery(bat.self_dual_grid(8, 3)))
    items = [(i, cfg.points, cfg.K, cfg.batch, cfg.seed, cfg.convert_pairs) for i in range(n)]
    return [c for group in _map(_class_case, items, workers) for c in group]


# ---------------------------------------------------------------- invariance


def _invariance_case(index: int, cfg: InvarianceConfig) -> list:
    a = bat.invariance_symbols()[index]
    coarse = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    fine = GridSpec.uniform(cfg.half_width, cfg.fine_points, 1)
    reps = {}
    for g in (coarse, fine):
        battery = bat.pair_battery(g, cfg.pairs_per_symbol, cfg.seed, param_grid=coarse)
        reps[g.axes[0].points] = verify_invariance(a, bat.INVARIANCE_PAIRS, battery, cfg.tolerance,
                                                   battery_id=f"gauss-pairs-seed{cfg.seed}", reference="kernel")
    out = []
    for rc, rf in zip(reps[cfg.points], reps[cfg.fine_points]):
        metrics = {"rel_error": rc.rel_error, "rel_error_fine": rf.rel_error,
                   "scaling": rc.rel_error / max(rf.rel_error, 1e-300), "report": rc.to_json()}
        out.append(_case(f"{a.label}:{rc.pair_from}->{rc.pair_to}",
                         {"symbol": a.label, "from": rc.pair_from.to_json(), "to": rc.pair_to.to_json(),
                          "points": cfg.points, "fine_points": cfg.fine_points, "seed": cfg.seed},
                         metrics, rc.passed))
    return out


def run_invariance(cfg: InvarianceConfig, workers: int = 1) -> list:
    items = [(i, cfg) for i in range(len(bat.invariance_symbols()))]
    cases = [c for group in _map(_invariance_case, items, workers) for c in group]
    # the periodization scaling is a statement about the worst case
    worst = max(cases, key=lambda c: c["metrics"]["rel_error"])
    worst_fine = max(c["metrics"]["rel_error_fine"] for c in cases)
    ratio = worst["metrics"]["rel_error"] / max(worst_fine, 1e-300)
    cases.append(_case("worst_case_scaling", {"points": cfg.points, "fine_points": cfg.fine_points},
                       {"worst": worst["metrics"]["rel_error"], "worst_fine": worst_fine, "ratio": ratio,
                        "worst_case": worst["case"]}, ratio >= cfg.min_scaling))
    return cases


# ---------------------------------------------------------------- covariance


def covariance_symbols(grid: GridSpec) -> dict:
    X, XI, ETA = grid.mesh()
    raw = {
        "gauss": np.exp(-(X**2 + XI**2 + ETA**2) / 2),
        "aniso_mod": np.exp(-(X**2) / 2.6 - XI**2 / 1.4 - ETA**2 / 3 + 0.5j * X),
        "poly_gauss": (1 + 0.3 * X * XI - 0.2j * ETA) * np.exp(-(X**2 + XI**2 + ETA**2) / 2.4),
    }
    return {k: SampledField(grid, np.broadcast_to(v, grid.shape).astype(complex)) for k, v in raw.items()}


def _covariance_case(name: str, cfg: CovarianceConfig) -> list:
    grid = bat.self_dual_grid(cfg.points, 3)
    a = covariance_symbols(grid)[name]
    window = bat.gaussian_window(grid)
    plan = make_covariance_plan(grid, cfg.plan_points, cfg.seed)
    out = []
    for p in cfg.pairs:
        dev = stft_covariance_check(a, window, tuple(p), plan)
        out.append(_case(f"{name}:{QuantizationPair.parse(p)}",
                         {"symbol": name, "pair": _pair_json(p), "points": cfg.points,
                          "plan_points": cfg.plan_points, "seed": cfg.seed},
                         {"max_deviation": dev}, dev <= cfg.tolerance))
    return out


def run_covariance(cfg: CovarianceConfig, workers: int = 1) -> list:
    items = [(name, cfg) for name in ("gauss", "aniso_mod", "poly_gauss")]
    return [c for group in _map(_covariance_case, items, workers) for c in group]


# ---------------------------------------------------------------- oracle quadrature


def run_oracle(cfg: OracleConfig, workers: int = 1) -> list:
    grid = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    f, g = bat.oracle_functions(grid)
    syms = bat.oracle_symbols(cfg.half_width)
    cases = []
    for name, pair in bat.ORACLE_CASES:
        a = syms[name]
        kn = apply_bilinear(a, pair, f, g, pathway="kn").values
        direct = apply_bilinear(a, pair, f, g, pathway="direct").values
        err = relative_l2(kn, direct)
        cases.append(_case(f"{name}:{QuantizationPair.parse(pair)}",
                           {"symbol": name, "pair": _pair_json(pair), "points": cfg.points,
                            "half_width": cfg.half_width},
                           {"rel_error": err}, err <= cfg.tolerance))
    og = GridSpec.uniform(cfg.offset_half_width, cfg.offset_points, 1)
    x = og.coords(0)
    gg = SampledField(og, np.exp(-(x**2) / 2) + 0j)
    tests = [SampledField(og, np.exp(-((x - c) ** 2) / 2 + 1j * m * x)) for c, m in
             [(0, 0), (0.5, 0.3), (-0.7, -0.5), (1, 1)]]
    res = offset_oracle(og, gg, tests)
    err = abs(res.offset - (-0.5j))
    cases.append(_case("x_xi_offset", {"points": cfg.offset_points, "half_width": cfg.offset_half_width,
                                       "from": [0.5, 0.0], "to": [0.0, 0.0]},
                       {"offset_error": err, "oracle": res.to_json()},
                       err <= cfg.offset_tol and res.accepted_sign == 1))
    return cases


# ---------------------------------------------------------------- boundedness


def boundedness_configs() -> list:
    one = ClosedFormSymbol(lambda x, xi, eta: np.ones(np.broadcast_shapes(np.shape(x), np.shape(xi), np.shape(eta))),
                           "one")
    gauss = ClosedFormSymbol(lambda x, xi, eta: np.exp(-(x**2) / 8 - (xi**2 + eta**2) / 8), "gauss")
    ridge = ClosedFormSymbol(lambda x, xi, eta: np.exp(-((xi - eta) ** 2) / 4) * (1 + 0.5j * np.tanh(x)), "ridge")
    return [
        ("unit", one, (0, 0), WeightModel.unit(2), WeightModel.unit(2), MixedExponents(2, 2), 0.1),
        ("gauss_peetre", gauss, (0.5, 0.5), WeightModel.single(2, poly_degree=1),
         WeightModel.single(2, poly_degree=-1), MixedExponents(1, 1), 0.2),
        ("ridge_exp", ridge, (1 / 3, 1 / 3), WeightModel.per_axis([0.1, 0], [1, 1]), WeightModel.unit(2),
         MixedExponents(2, math.inf), 0.1),
    ]


def _boundedness_case(index: int, cfg: BoundednessConfig) -> dict:
    name, a, pair, w0, w, pq, R = boundedness_configs()[index]
    grid = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    spec = GevreyClassSpec()
    reps = [boundedness_probe(a, pair, spec, w0, w, pq, R, n, cfg.seed, fgrid=grid) for n in cfg.sizes]
    maxes = [r.max_ratio for r in reps]
    shift = abs(maxes[-1] / maxes[0] - 1)
    dist = {str(n): {"max": r.max_ratio, "median": float(np.median(r.ratios)),
                     "p90": float(np.quantile(r.ratios, 0.9))} for n, r in zip(cfg.sizes, reps)}
    inputs = {"config": name, "symbol": a.label, "pair": _pair_json(pair), "w0": w0.to_json(), "w": w.to_json(),
              "pq": pq.to_json(), "R": R, "sizes": cfg.sizes, "seed": cfg.seed, "points": cfg.points}
    ok = all(math.isfinite(m) and m < cfg.guard for m in maxes) and shift < cfg.max_shift
    return _case(name, inputs, {"distribution": dist, "max_shift": shift,
                                "note": "qualitative evidence only; no constant asserted"}, ok)


def run_boundedness(cfg: BoundednessConfig, workers: int = 1) -> list:
    items = [(i, cfg) for i in range(len(boundedness_configs()))]
    return _map(_boundedness_case, items, workers)


# ---------------------------------------------------------------- GS continuity


def gs_symbols() -> list:
    one = boundedness_configs()[0][1]
    gauss = ClosedFormSymbol(lambda x, xi, eta: np.exp(-(x**2) / 4 - (xi**2 + eta**2) / 2) * (1 + 0.3j * xi),
                             "gauss_poly")
    return [(one, (0, 0)), (gauss, (0.5, 0.5)), (gauss, (1 / 3, 1 / 3))]


def slow_tail(grid: GridSpec, power: float = 0.125) -> SampledField:
    x = grid.coords(0)
    return SampledField(grid, (1 + x**2) ** (-power) + 0j)


def run_gs_continuity(cfg: GsContinuityConfig, workers: int = 1) -> list:
    grid = GridSpec.uniform(cfg.half_width, cfg.points, 1)
    battery = bat.pair_battery(grid, cfg.pairs, cfg.seed)
    cases = []
    for a, pair in gs_symbols():
        reps = gs_continuity_check(a, pair, cfg.s, cfg.sigma, battery, r_min=cfg.r_min)
        rates = [r.common_rate for r in reps]
        fitted = [r for r in rates if r is not None]
        cases.append(_case(f"{a.label}:{QuantizationPair.parse(pair)}",
                           {"symbol": a.label, "pair": _pair_json(pair), "s": cfg.s, "sigma": cfg.sigma,
                            "pairs": cfg.pairs, "seed": cfg.seed, "r_min": cfg.r_min},
                           {"min_rate": min(fitted) if fitted else None,
                            "numerically_zero_outputs": len(rates) - len(fitted),
                            "reports": [r.to_json() for r in reps]},
                           all(r.passed for r in reps)))
    bad = list(battery)
    bad[0] = (slow_tail(grid), bad[0][1])
    try:
        gs_continuity_check(gs_symbols()[0][0], (0, 0), cfg.s, cfg.sigma, bad, r_min=cfg.r_min)
        rejected, msg = False, ""
    except GateRejection as exc:
        rejected, msg = True, str(exc)
    cases.append(_case("slow_tail_gate", {"power": 0.125, "r_min": cfg.r_min}, {"rejected": rejected,
                                                                              "message": msg}, rejected))
    return cases


# ---------------------------------------------------------------- driver


RUNNERS = {
    "fourier": run_fourier,
    "stft": run_stft,
    "weights": run_weights,
    "classes": run_classes,
    "invariance": run_invariance,
    "covariance": run_covariance,
    "oracle-quadrature": run_oracle,
    "boundedness": run_boundedness,
    "gs-continuity": run_gs_continuity,
}

SUITES = tuple(RUNNERS)


class UnknownSuiteError(KeyError):
    pass


def run_suite(name: str, overrides: dict | None = None, workers: int = 1) -> SuiteResult:
    if name not in RUNNERS:
        raise UnknownSuiteError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    cfg = make_config(name, overrides)
    t0 = time.perf_counter()
    cases = RUNNERS[name](cfg, workers)
    wall = time.perf_counter() - t0
    return SuiteResult(name, cases, all(c["pass"] for c in cases), wall, asdict(cfg))
