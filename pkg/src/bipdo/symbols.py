"""Gevrey-Hormander symbol classes: derivative tables, STFT decay and modulation-space checks.

All three diagnostics look at the same symbol from different sides:

* ``gamma_norm_estimate`` fits h in |d^a_x d^b_xi d^c_eta a| <= C h^k a!^sigma1 b!^s2 c!^s3 omega,
* ``stft_class_check`` fits R in |V_phi a(X,Z)| <= C omega(X) exp(-R Phi(Z)),
* ``modspace_class_check`` measures ||omega_R^-1 V_phi a||_{L^{inf,q}} for a given R.

On one finite grid "finite h" and "some R > 0" are always true, so the
verdicts compare h and R with thresholds tied to the grid's resolution
(``ClassThresholds``).  These are heuristics and are reported as such.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import qmc

from .lattice import FREQUENCY, SPACE, GridError, GridSpec, SampledField, forward_ft
from .timefreq import DEFAULT_FLOOR, DecayFitReport, fit_decay_points, stft_at
from .weights import WeightModel

MAX_CLASS_ORDER = 8
ROUMIEU = "roumieu"
BEURLING = "beurling"


@dataclass(frozen=True)
class GevreyClassSpec:
    sigma1: float = 1.0
    s2: float = 1.0
    s3: float = 1.0
    flavor: str = ROUMIEU
    weight: WeightModel = field(default_factory=lambda: WeightModel.unit(3))

    def __post_init__(self):
        if min(self.sigma1, self.s2, self.s3) <= 0:
            raise ValueError("class exponents must be positive")
        if self.flavor not in (ROUMIEU, BEURLING):
            raise ValueError(f"flavor must be {ROUMIEU!r} or {BEURLING!r}")

    @property
    def exponents(self) -> tuple[float, float, float]:
        return (self.sigma1, self.s2, self.s3)

    @property
    def decay_powers(self) -> tuple[float, float, float]:
        """Powers on (zeta, y, z) in the STFT characterization."""
        return (1 / self.sigma1, 1 / self.s2, 1 / self.s3)

    def admissibility(self, s1: float | None = None, sigma2: float | None = None,
                      sigma3: float | None = None) -> dict:
        """Ordering flags against an ambient Gelfand-Shilov spec (recorded, not enforced)."""
        flags = {}
        if s1 is not None:
            flags["s2,s3 <= s1"] = bool(self.s2 <= s1 and self.s3 <= s1)
        if sigma2 is not None and sigma3 is not None:
            flags["sigma1 <= sigma2,sigma3"] = bool(self.sigma1 <= sigma2 and self.sigma1 <= sigma3)
        return flags

    def to_json(self) -> dict:
        return {"sigma1": self.sigma1, "s2": self.s2, "s3": self.s3, "flavor": self.flavor,
                "weight": self.weight.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "GevreyClassSpec":
        w = WeightModel.from_json(d["weight"]) if "weight" in d else WeightModel.unit(3)
        return cls(d.get("sigma1", 1.0), d.get("s2", 1.0), d.get("s3", 1.0), d.get("flavor", ROUMIEU), w)


@dataclass(frozen=True)
class ClassThresholds:
    """Resolution-tied verdict thresholds.

    h_max and the modulation-space guard are expressed through the grid's
    smallest Nyquist frequency k_nyq: content at frequencies beyond a fixed
    fraction of k_nyq counts as irregular at this resolution.  r_min sits
    between the smallest in-class rate and the out-of-class rates of the
    engineered battery.
    """

    h_frac: float = 0.3
    r_min: float = 0.1
    mod_rate: float = 0.5
    guard_frac: float = 0.5
    zero_rel: float = 1e-13

    @staticmethod
    def nyquist(grid: GridSpec) -> float:
        return min(ax.dual().half_width for ax in grid.axes)

    def h_max(self, grid: GridSpec) -> float:
        return self.h_frac * self.nyquist(grid)

    def guard_phi(self, grid: GridSpec) -> float:
        return self.guard_frac * self.nyquist(grid)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class ClassNormReport:
    h_fit: float
    max_order: int
    table: dict
    passed: bool
    prefactor: float
    h_max: float | None = None
    h_by_order: list = field(default_factory=list)
    beurling_pass: bool | None = None
    note: str = "Roumieu verdict: h_fit <= h_max; Beurling: h non-increasing along the order ladder (heuristic)"

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _orders(K: int, rank: int = 3):
    for o in itertools.product(range(K + 1), repeat=rank):
        if 0 < sum(o) <= K:
            yield o


def _derivative_multipliers(grid: GridSpec, order: tuple[int, ...]) -> list[np.ndarray]:
    out = []
    for axis, (ax, k) in enumerate(zip(grid.axes, order)):
        kk = np.fft.fftfreq(ax.points, d=1.0 / ax.points)
        m = (1j * kk * ax.dual_spacing) ** k
        if k % 2:
            m[ax.points // 2] = 0.0
        shape = [1] * grid.rank
        shape[axis] = ax.points
        out.append(m.reshape(shape))
    return out


def gamma_norm_estimate(
    a: SampledField,
    spec: GevreyClassSpec,
    K: int = 4,
    h_max: float | None = None,
    region: np.ndarray | None = None,
    zero_rel: float = 1e-13,
) -> ClassNormReport:
    """Derivative table of a up to total order K, normalized by factorials and the weight.

    h_fit = max over orders of (ratio / ratio_0)^(1/|order|); ratios below
    ``zero_rel`` times the order-0 ratio are treated as exact zeros.
    With ``h_max`` None the verdict is Roumieu finiteness only.
    """
    if K > MAX_CLASS_ORDER:
        raise ValueError(f"K must be <= {MAX_CLASS_ORDER}")
    if a.rank != 3:
        raise GridError("class norms are defined for 3-axis symbols")
    grid = a.grid
    logw = np.broadcast_to(spec.weight.log_value(grid.mesh()), grid.shape)
    inv_w = np.exp(-logw)
    mask = np.ones(grid.shape, bool) if region is None else region
    base = np.abs(a.values) * inv_w
    prefactor = float(base[mask].max())
    if prefactor == 0:
        raise ValueError("symbol vanishes on the region")
    spec_a = np.fft.fftn(a.values)
    table = {}
    h_fit = 0.0
    h_by_order = [0.0] * (K + 1)
    for order in _orders(K):
        mult = 1.0
        for m in _derivative_multipliers(grid, order):
            mult = mult * m
        d = np.fft.ifftn(spec_a * mult)
        if not np.all(np.isfinite(d)):
            return ClassNormReport(math.inf, K, table, False, prefactor, h_max, note=f"blow-up at order {order}")
        log_fact = sum(s * gammaln(k + 1) for s, k in zip(spec.exponents, order))
        ratio = float((np.abs(d) * inv_w)[mask].max()) * math.exp(-log_fact)
        table[",".join(map(str, order))] = ratio
        k = sum(order)
        rel = ratio / prefactor
        h = 0.0 if rel <= zero_rel else rel ** (1.0 / k)
        h_by_order[k] = max(h_by_order[k], h)
        h_fit = max(h_fit, h)
    ladder = h_by_order[1:]
    beurling = all(b <= a_ * (1 + 1e-9) for a_, b in zip(ladder, ladder[1:]))
    passed = math.isfinite(h_fit) and (h_max is None or h_fit <= h_max)
    return ClassNormReport(h_fit, K, table, bool(passed), prefactor, h_max, ladder, bool(beurling))


# ---------------------------------------------------------------- sampling plan


@dataclass
class SamplingPlan:
    """Z points whose V_phi a is evaluated on the full X grid, plus a batch of isolated (X, Z) pairs."""

    z_full: np.ndarray  # (n, 3) dual points (coordinates)
    batch_x: np.ndarray  # (m, 3) integer X indices
    batch_z: np.ndarray  # (m, 3) dual coordinates

    def to_json(self) -> dict:
        return {"z_full": len(self.z_full), "batch": len(self.batch_x)}


def _ray_directions() -> np.ndarray:
    dirs = set()
    for v in itertools.product((-1, 0, 1), repeat=3):
        if any(v):
            dirs.add(v)
    return np.array(sorted(dirs), dtype=float)


def make_sampling_plan(grid: GridSpec, points_per_ray: int = 8, stride: int = 4, batch: int = 10_000,
                       seed: int = 0) -> SamplingPlan:
    """Rays (axes, face and body diagonals) out to the dual box, a strided dual sub-lattice, and a
    scrambled Sobol batch of (X, Z) pairs."""
    duals = [ax.dual() for ax in grid.axes]
    zmax = np.array([d.half_width for d in duals])
    dz = np.array([ax.dual_spacing for ax in grid.axes])
    pts = [np.zeros(3)]
    for d in _ray_directions():
        for rho in np.linspace(0, 1, points_per_ray + 1)[1:]:
            idx = np.round(d * rho * (zmax / dz - 1))
            pts.append(idx * dz)
    sub = [np.arange(-(ax.points // 2), ax.points // 2, stride) * ax.dual_spacing for ax in grid.axes]
    pts.extend(np.stack(np.meshgrid(*sub, indexing="ij"), -1).reshape(-1, 3))
    z_full = np.unique(np.round(np.array(pts), 12), axis=0)
    if batch:
        # lattice Z keeps the batch free of the leakage a non-lattice frequency causes on a periodic grid
        m = 1 << max(0, math.ceil(math.log2(batch)))
        sob = qmc.Sobol(d=6, scramble=True, seed=seed).random(m)[:batch]
        n = np.array(grid.shape)
        bx = np.minimum((sob[:, :3] * n).astype(int), n - 1)
        bz = (np.minimum((sob[:, 3:] * n).astype(int), n - 1) - n // 2) * dz
    else:
        bx = np.zeros((0, 3), int)
        bz = np.zeros((0, 3))
    return SamplingPlan(z_full, bx, bz)


def separable_factors(window: SampledField, tol: float = 1e-12):
    """1-D factors of a rank-one (separable) 3-axis window, or None."""
    v = window.values
    c = tuple(n // 2 for n in v.shape)
    pivot = v[c]
    if abs(pivot) == 0:
        return None
    f0, f1, f2 = v[:, c[1], c[2]], v[c[0], :, c[2]] / pivot, v[c[0], c[1], :] / pivot
    outer = f0[:, None, None] * f1[None, :, None] * f2[None, None, :]
    if np.max(np.abs(outer - v)) > tol * np.max(np.abs(v)):
        return None
    return f0, f1, f2


def _batch_stft(a: SampledField, window: SampledField, bx: np.ndarray, bz: np.ndarray) -> np.ndarray:
    grid = a.grid
    scale = grid.cell_volume * (2 * np.pi) ** (-1.5)
    half = np.array(grid.shape) // 2
    factors = separable_factors(window)
    if factors is not None:
        # V_n = sum a[y1,y2,y3] u1[n,y1] u2[n,y2] u3[n,y3]: one matrix product, then two contractions
        us = []
        for j, fac in enumerate(factors):
            n = grid.axes[j].points
            idx = (np.arange(n)[None, :] - bx[:, j][:, None] + half[j]) % n
            y = grid.coords(j)
            us.append(np.conj(fac[idx]) * np.exp(-1j * bz[:, j][:, None] * y[None, :]))
        n0, n1, n2 = grid.shape
        out = np.empty(len(bx), dtype=complex)
        for sl in np.array_split(np.arange(len(bx)), max(1, len(bx) // 512)):
            T = (us[0][sl] @ a.values.reshape(n0, n1 * n2)).reshape(len(sl), n1, n2)
            out[sl] = np.einsum("nbc,nb,nc->n", T, us[1][sl], us[2][sl])
        return out * scale
    mesh = grid.mesh()
    out = np.empty(len(bx), dtype=complex)
    for i, (xi, z) in enumerate(zip(bx, bz)):
        win = np.roll(window.values, tuple(int(v) for v in xi - half), (0, 1, 2))
        wave = np.exp(-1j * (mesh[0] * z[0] + mesh[1] * z[1] + mesh[2] * z[2]))
        out[i] = np.sum(a.values * np.conj(win) * wave) * scale
    return out


@dataclass
class PlanValues:
    """log(|V_phi a(X, Z)| / omega(X)) at the plan points.

    For the full-grid Z points only the sup over X is kept: it is the binding
    value for both the decay fit and the L^{inf,q} norm.
    """

    z: np.ndarray  # (n + m, 3): full-grid Z points first, then the batch
    log_v: np.ndarray  # (n + m,)
    z_full_count: int


def evaluate_plan(a: SampledField, window: SampledField, plan: SamplingPlan, weight: WeightModel) -> PlanValues:
    a.require_same_grid(window)
    grid = a.grid
    logw = np.broadcast_to(weight.log_value(grid.mesh()), grid.shape)
    sup = []
    with np.errstate(divide="ignore"):
        for chunk in np.array_split(plan.z_full, max(1, len(plan.z_full) // 32)):
            V = stft_at(a, window, chunk)
            sup.append((np.log(np.abs(V)) - logw[None]).reshape(len(chunk), -1).max(axis=1))
        zs, logs = [plan.z_full], [np.concatenate(sup)]
        if len(plan.batch_x):
            vb = _batch_stft(a, window, plan.batch_x, plan.batch_z)
            zs.append(plan.batch_z)
            logs.append(np.log(np.abs(vb)) - logw[tuple(plan.batch_x.T)])
    return PlanValues(np.concatenate(zs), np.concatenate(logs), len(plan.z_full))


def _phi_raw(z: np.ndarray, powers: Sequence[float]) -> np.ndarray:
    return np.sum(np.abs(z) ** np.asarray(powers), axis=1)


def sup_form(values: PlanValues, powers: Sequence[float], R: float, floor: float = DEFAULT_FLOOR) -> float:
    """max over plan of |V| exp(R Phi(Z)) / omega(X), numerically-zero samples dropped."""
    top = float(np.max(values.log_v))
    keep = values.log_v >= top + math.log(floor)
    return float(np.exp(np.max(values.log_v[keep] + R * _phi_raw(values.z[keep], powers))))


def stft_class_check(
    a: SampledField,
    window: SampledField,
    spec: GevreyClassSpec,
    R_ladder: Sequence[float] = (),
    plan: SamplingPlan | None = None,
    r_min: float = 0.25,
    floor: float = DEFAULT_FLOOR,
    values: PlanValues | None = None,
) -> DecayFitReport:
    """Fit R in |V_phi a(X,Z)| <= C omega(X) exp(-R sum_j |Z_j|^{p_j}) over the sampling plan.

    Points within the unit core of Z are excluded through the tail gauge of
    ``fit_decay_points``.  Roumieu pass: fitted R >= r_min.  The Beurling
    ladder asks each R in ``R_ladder`` to hold on successively smaller Z boxes.
    """
    if values is None:
        plan = plan or make_sampling_plan(a.grid)
        values = evaluate_plan(a, window, plan, spec.weight)
    if not np.any(np.isfinite(values.log_v)):
        from .timefreq import DegenerateInputError

        raise DegenerateInputError("all STFT samples vanish")
    zmax = max(ax.dual().half_width for ax in a.grid.axes)
    ladder = [(zmax * (1 - 0.5 * i / max(1, len(R_ladder))), R) for i, R in enumerate(R_ladder)] or None
    rep = fit_decay_points(values.z, values.log_v, spec.decay_powers, floor=floor, r_min=r_min, ladder=ladder)
    # one common rate over the three Z axes is the quantity the characterization uses
    rep.passed = bool(rep.common_rate is not None and rep.common_rate >= r_min)
    return rep


def modspace_class_check(
    a: SampledField,
    window: SampledField,
    spec: GevreyClassSpec,
    q: float,
    R: float,
    plan: SamplingPlan | None = None,
    floor: float = DEFAULT_FLOOR,
    values: PlanValues | None = None,
) -> float:
    """|| omega_R^-1 V_phi a ||_{L^{inf,q}}: sup over X, then the q-norm over the full-grid Z points.

    omega_R(X, Z) = omega(X) exp(-R sum_j |Z_j|^{p_j}).  The q-sum uses the
    dual cell volume per Z point (plan points carry equal weight).
    """
    if values is None:
        plan = plan or make_sampling_plan(a.grid)
        values = evaluate_plan(a, window, plan, spec.weight)
    n = values.z_full_count
    top = float(np.max(values.log_v))
    log_v = values.log_v[:n]
    log_v = np.where(log_v >= top + math.log(floor), log_v, -np.inf)
    per_z = log_v + R * _phi_raw(values.z[:n], spec.decay_powers)
    if math.isinf(q):
        batch = values.log_v[n:]
        vals = [per_z.max()]
        if batch.size:
            bz = values.z[n:]
            keep = batch >= top + math.log(floor)
            if np.any(keep):
                vals.append(np.max(batch[keep] + R * _phi_raw(bz[keep], spec.decay_powers)))
        log_total = float(max(vals))
    else:
        cell = float(np.prod([ax.dual_spacing for ax in a.grid.axes]))
        m = float(per_z.max())
        log_total = m + math.log(cell * np.sum(np.exp(q * (per_z - m)))) / q
    if log_total > 709:
        raise OverflowError(f"modulation-space value beyond double range (log {log_total:.1f})")
    return math.exp(log_total)


@dataclass
class ModspaceVerdict:
    value: float
    normalized: float
    guard: float
    passed: bool
    R: float
    q: float

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["q"] = "inf" if math.isinf(self.q) else self.q
        return d


def modspace_verdict(a, window, spec, q: float, R: float, values: PlanValues, guard_phi: float) -> ModspaceVerdict:
    """Finiteness at desk scale: the value, normalized by the plain sup and the Z-measure, stays below
    exp(R * guard_phi).  A symbol decaying at rate >= R only picks up the growth of exp(R Phi) inside
    the window core; content at Phi beyond guard_phi that does not decay pushes the value over."""
    val = modspace_class_check(a, window, spec, q, R, values=values)
    base = sup_form(values, spec.decay_powers, 0.0)
    n = values.z_full_count
    cell = float(np.prod([ax.dual_spacing for ax in a.grid.axes]))
    mu = 1.0 if math.isinf(q) else (n * cell) ** (1.0 / q)
    guard = math.exp(R * guard_phi)
    normalized = val / (base * mu)
    return ModspaceVerdict(val, normalized, guard, bool(normalized <= guard), R, q)


def partial_symbol(a: SampledField, g: SampledField) -> SampledField:
    """a_g(x, xi) = (2 pi)^-1/2 sum_eta exp(i x eta) a(x, xi, eta) g^(eta) d eta."""
    if a.rank != 3 or g.rank != 1:
        raise GridError("partial_symbol needs a 3-axis symbol and a one-axis function")
    eta_ax = a.grid.axes[2]
    if not eta_ax.matches(g.grid.axes[0].dual()):
        raise GridError("eta lattice of the symbol is not the dual lattice of g")
    ghat = forward_ft(g).values
    x = a.grid.coords(0)
    E = np.exp(1j * np.outer(x, eta_ax.coords()))  # [x, eta]
    vals = np.einsum("xkl,xl,l->xk", a.values, E, ghat) * eta_ax.spacing / math.sqrt(2 * math.pi)
    return SampledField(a.grid.sub((0, 1)), vals, (SPACE, FREQUENCY))
