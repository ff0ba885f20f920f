"""The (r, t) bilinear quantization family on periodized grids.

Symbols a(x, xi, eta) live on a 3-axis grid whose xi and eta axes are the
dual lattice of the function grid.  Sign convention for the quantization
transform (fixed by the dense-matrix offset oracle, see ``offset_oracle``):

    b^(zeta, y, z) = exp(+i ((r1 - r2) y + (t1 - t2) z) zeta) a^(zeta, y, z)

gives Op_{r1,t1}(a) = Op_{r2,t2}(b), where ^ is the full 3-axis transform with
zeta dual to x, y dual to xi and z dual to eta.  With this sign,
converting x*xi from (1/2, 0) to (0, 0) yields x*xi - i/2.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import (
    FREQUENCY,
    SPACE,
    AxisSpec,
    GridError,
    GridSpec,
    SampledField,
    forward_ft,
    forward_ft_array,
    inverse_ft_array,
    translate,
)

ADMISSIBILITY_TOL = 1e-12
MULTIPLIER_SIGN = +1
DIRECT_MAX_POINTS = 32
SYMBOL_ROLES = (SPACE, FREQUENCY, FREQUENCY)


class InadmissiblePairError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizationPair:
    r: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        r, t = float(self.r), float(self.t)
        tol = ADMISSIBILITY_TOL
        if not (-tol <= r <= 1 + tol and -tol <= t <= 1 + tol and r + t <= 1 + tol):
            raise InadmissiblePairError(f"pair ({r}, {t}) is not admissible: need r, t in [0,1] and r + t <= 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def parse(cls, value) -> "QuantizationPair":
        if isinstance(value, QuantizationPair):
            return value
        if isinstance(value, dict):
            return cls(value["r"], value["t"])
        r, t = value
        return cls(float(r), float(t))

    def to_json(self) -> list:
        return [self.r, self.t]

    def __str__(self):
        return f"({self.r:g},{self.t:g})"


KOHN_NIRENBERG = QuantizationPair(0.0, 0.0)


@dataclass(frozen=True)
class ClosedFormSymbol:
    """A symbol known in closed form; ``fn(x, xi, eta)`` must broadcast."""

    fn: Callable
    label: str = "symbol"

    def __call__(self, x, xi, eta):
        return self.fn(x, xi, eta)

    def sample(self, grid: GridSpec) -> SampledField:
        return SampledField.from_function(grid, self.fn, SYMBOL_ROLES)


def symbol_grid(fgrid: GridSpec) -> GridSpec:
    """(x, xi, eta) grid matching a one-axis function grid."""
    if fgrid.rank != 1:
        raise GridError("bilinear symbols are implemented for one-dimensional functions")
    ax = fgrid.axes[0]
    return GridSpec((ax, ax.dual(), ax.dual()))


def linear_symbol_grid(fgrid: GridSpec) -> GridSpec:
    ax = fgrid.axes[0]
    return GridSpec((ax, ax.dual()))


def _as_sampled(a, grid: GridSpec | None) -> SampledField:
    if isinstance(a, SampledField):
        return a
    if grid is None:
        raise GridError("a closed-form symbol needs a grid to be sampled on")
    return a.sample(grid)


def _check_symbol_grid(a: SampledField, fgrid: GridSpec, rank: int = 3) -> None:
    if a.rank != rank:
        raise GridError(f"symbol must have {rank} axes, got {a.rank}")
    expected = symbol_grid(fgrid) if rank == 3 else linear_symbol_grid(fgrid)
    if not a.grid.matches(expected):
        raise GridError("symbol lattice does not match the function grid and its dual")


def convert_symbol(a: SampledField, from_pair, to_pair) -> SampledField:
    """Symbol b with Op_to(b) = Op_from(a), by an exact phase multiplier in the full Fourier domain."""
    p1, p2 = QuantizationPair.parse(from_pair), QuantizationPair.parse(to_pair)
    if a.rank != 3:
        raise GridError("convert_symbol expects a 3-axis symbol")
    dr, dt = p1.r - p2.r, p1.t - p2.t
    if dr == 0 and dt == 0:
        return a.with_values(a.values.copy())
    sel = (0, 1, 2)
    spec = forward_ft_array(a.values, a.grid, sel)
    dual = a.grid.dual(sel)
    zeta, y, z = dual.mesh()
    spec = spec * np.exp(MULTIPLIER_SIGN * 1j * (dr * y + dt * z) * zeta)
    return a.with_values(inverse_ft_array(spec, dual, sel))


def convert_linear_symbol(a: SampledField, t_from: float, t_to: float) -> SampledField:
    """Linear analogue: Op_{t_to}(b) = Op_{t_from}(a)."""
    d = float(t_from) - float(t_to)
    if d == 0:
        return a.with_values(a.values.copy())
    sel = (0, 1)
    spec = forward_ft_array(a.values, a.grid, sel)
    dual = a.grid.dual(sel)
    zeta, y = dual.mesh()
    spec = spec * np.exp(MULTIPLIER_SIGN * 1j * d * y * zeta)
    return a.with_values(inverse_ft_array(spec, dual, sel))


def _exp_kernel(ax: AxisSpec) -> np.ndarray:
    # E[j, k] = exp(i x_j xi_k)
    return np.exp(1j * np.outer(ax.coords(), ax.dual().coords()))


def fourier_interp_matrix(ax: AxisSpec, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant (same mode set as ``translate``) at ``points``."""
    k = ax.indices() * ax.dual_spacing
    x = ax.coords()
    return np.exp(1j * (np.asarray(points)[:, None, None] - x[None, :, None]) * k[None, None, :]).sum(-1) / ax.points


def _kn_linear(a: np.ndarray, f: SampledField) -> np.ndarray:
    ax = f.grid.axes[0]
    fhat = forward_ft(f).values
    E = _exp_kernel(ax)
    return (E * a) @ fhat * ax.dual_spacing / math.sqrt(2 * math.pi)


def _kn_bilinear(a: np.ndarray, f: SampledField, g: SampledField) -> np.ndarray:
    ax = f.grid.axes[0]
    E = _exp_kernel(ax)
    Ef = E * forward_ft(f).values[None, :]
    Eg = E * forward_ft(g).values[None, :]
    return np.einsum("jkl,jk,jl->j", a, Ef, Eg, optimize=True) * ax.dual_spacing**2 / (2 * math.pi)


def apply_linear(a, t: float, f: SampledField, pathway: str = "fft") -> SampledField:
    """Op_t(a) f.  ``fft`` converts to t = 0 and uses the Kohn-Nirenberg form; ``direct`` is double quadrature."""
    if not 0 <= t <= 1:
        raise InadmissiblePairError("t must lie in [0, 1]")
    lgrid = linear_symbol_grid(f.grid)
    if pathway == "fft":
        a_s = _as_sampled(a, lgrid) if not isinstance(a, ClosedFormSymbol) else SampledField.from_function(
            lgrid, lambda x, xi: a.fn(x, xi, 0.0), SYMBOL_ROLES[:2]
        )
        _check_symbol_grid(a_s, f.grid, rank=2)
        b = convert_linear_symbol(a_s, t, 0.0)
        return SampledField(f.grid, _kn_linear(b.values, f))
    if pathway != "direct":
        raise ValueError(f"unknown pathway {pathway!r}")
    ax = f.grid.axes[0]
    x = ax.coords()
    xi = ax.dual().coords()
    out = np.empty(ax.points, dtype=complex)
    for j, xj in enumerate(x):
        w = xj - t * (xj - x)  # indexed by y
        if isinstance(a, ClosedFormSymbol):
            vals = a.fn(w[:, None], xi[None, :], 0.0) * np.ones((1, ax.points))
        else:
            _check_symbol_grid(a, f.grid, rank=2)
            vals = fourier_interp_matrix(ax, w) @ a.values
        phase = np.exp(1j * (xj - x)[:, None] * xi[None, :])
        out[j] = np.sum(vals * phase * f.values[:, None])
    return SampledField(f.grid, out * ax.spacing * ax.dual_spacing / (2 * math.pi))


def sheared_kernel(a, pair, ax: AxisSpec) -> np.ndarray:
    """K[j, m, n] with Op_{r,t}(a)(f,g)(x_j) = sum_{m,n} K[j,m,n] f(x_j + u_m) g(x_j + u_n), cyclic offsets u.

    K = (2 pi)^-2 dx^2 A(x_j + r u_m + t u_n, u_m, u_n), A(w, u, v) being the
    (xi, eta) transform of a(w, ., .).  A closed-form symbol is evaluated
    exactly at the sheared points w; a sampled one through its trigonometric
    interpolant in x.
    """
    pair = QuantizationPair.parse(pair)
    n = ax.points
    dx = ax.spacing
    off = np.arange(n) - n // 2
    u = off * dx
    x = ax.coords()
    W = x[:, None, None] + pair.r * u[None, :, None] + pair.t * u[None, None, :]
    # collapse values equal up to float noise; keep an exact representative of each
    key = np.round(W / dx * 1e9).astype(np.int64)
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    inv = inv.reshape(W.shape)
    w_vals = W.ravel()[first]
    xi = ax.dual().coords()
    fxe = GridSpec((ax.dual(), ax.dual()))
    if isinstance(a, ClosedFormSymbol):
        slab = np.broadcast_to(a.fn(w_vals[:, None, None], xi[None, :, None], xi[None, None, :]),
                               (len(w_vals), n, n)).astype(complex)
    else:
        slab = (fourier_interp_matrix(ax, w_vals) @ a.values.reshape(n, n * n)).reshape(len(w_vals), n, n)
    # A(w, u_m, v_n) with u, v on the x lattice (the dual of the xi lattice)
    A = forward_ft_array(slab, GridSpec((AxisSpec(1.0, 2),) + fxe.axes), (1, 2)) * (2 * math.pi)
    mi = np.arange(n)[None, :, None]
    ni = np.arange(n)[None, None, :]
    return A[inv, np.broadcast_to(mi, W.shape), np.broadcast_to(ni, W.shape)] * dx**2 / (2 * math.pi) ** 2


def apply_sheared_kernel(K: np.ndarray, f: SampledField, g: SampledField) -> np.ndarray:
    n = f.grid.axes[0].points
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :] - n // 2) % n
    return np.einsum("jmn,jm,jn->j", K, f.values[idx], g.values[idx], optimize=True)


def _direct_quadrature(a, pair: QuantizationPair, f: SampledField, g: SampledField) -> np.ndarray:
    ax = f.grid.axes[0]
    n = ax.points
    if n > DIRECT_MAX_POINTS:
        raise GridError(f"direct quadrature is an oracle for N <= {DIRECT_MAX_POINTS}")
    x = ax.coords()
    xi = ax.dual().coords()
    Y = x[:, None, None, None]
    Z = x[None, :, None, None]
    K = xi[None, None, :, None]
    Lh = xi[None, None, None, :]
    out = np.empty(n, dtype=complex)
    fg = f.values[:, None, None, None] * g.values[None, :, None, None]
    for j, xj in enumerate(x):
        w = xj + pair.r * (Y - xj) + pair.t * (Z - xj)
        if isinstance(a, ClosedFormSymbol):
            vals = a.fn(w, K, Lh)
        else:
            wv = np.broadcast_to(w, (n, n, 1, 1)).ravel()
            interp = fourier_interp_matrix(ax, wv) @ a.values.reshape(n, n * n)
            vals = interp.reshape(n, n, n, n)
        phase = np.exp(1j * ((xj - Y) * K + (xj - Z) * Lh))
        out[j] = np.sum(vals * phase * fg)
    return out * (ax.spacing * ax.dual_spacing) ** 2 / (2 * math.pi) ** 2


def apply_bilinear(a, pair, f: SampledField, g: SampledField, pathway: str = "kn") -> SampledField:
    """Op_{r,t}(a)(f, g).

    pathways: ``kn`` converts to (0,0) and contracts in the Kohn-Nirenberg form
    (canonical); ``kernel`` sums the sheared kernel; ``direct`` is 4-fold
    quadrature (small grids only).  Closed-form symbols are sampled for ``kn``.
    """
    pair = QuantizationPair.parse(pair)
    f.require_same_grid(g)
    sgrid = symbol_grid(f.grid)
    if not isinstance(a, ClosedFormSymbol):
        _check_symbol_grid(a, f.grid)
    if pathway == "kn":
        b = convert_symbol(_as_sampled(a, sgrid), pair, KOHN_NIRENBERG)
        vals = _kn_bilinear(b.values, f, g)
    elif pathway == "kernel":
        vals = apply_sheared_kernel(sheared_kernel(a, pair, f.grid.axes[0]), f, g)
    elif pathway == "direct":
        vals = _direct_quadrature(a, pair, f, g)
    else:
        raise ValueError(f"unknown pathway {pathway!r}")
    return SampledField(f.grid, vals)


def bilinear_matrix(a: ClosedFormSymbol, pair, g: SampledField) -> np.ndarray:
    """Dense matrix M with M @ f.values = Op_{r,t}(a)(f, g), by direct quadrature.

    For t = 0 the z-sum factors out, which keeps N = 64 affordable.
    """
    pair = QuantizationPair.parse(pair)
    ax = g.grid.axes[0]
    n = ax.points
    x = ax.coords()
    xi = ax.dual().coords()
    scale = (ax.spacing * ax.dual_spacing) ** 2 / (2 * math.pi) ** 2
    M = np.empty((n, n), dtype=complex)
    for j, xj in enumerate(x):
        if pair.t == 0:
            # Gz[l] = sum_z exp(i (x - z) eta_l) g(z)
            Gz = np.exp(1j * (xj - x)[:, None] * xi[None, :]).T @ g.values
            w = xj + pair.r * (x - xj)
            vals = a.fn(w[:, None, None], xi[None, :, None], xi[None, None, :])
            vals = np.broadcast_to(vals, (n, n, n))
            phase = np.exp(1j * (xj - x)[:, None] * xi[None, :])
            M[j] = np.einsum("ykl,yk,l->y", vals, phase, Gz)
        else:
            if n > DIRECT_MAX_POINTS:
                raise GridError("general dense matrices are limited to small grids")
            Y = x[:, None, None, None]
            Z = x[None, :, None, None]
            K = xi[None, None, :, None]
            Lh = xi[None, None, None, :]
            w = xj + pair.r * (Y - xj) + pair.t * (Z - xj)
            vals = a.fn(w, K, Lh) * np.exp(1j * ((xj - Y) * K + (xj - Z) * Lh))
            M[j] = np.einsum("yzkl,z->y", np.broadcast_to(vals, (n, n, n, n)), g.values)
    return M * scale


@dataclass
class OffsetOracleResult:
    offset: complex
    residual: float
    predicted: dict
    accepted_sign: int

    def to_json(self) -> dict:
        return {
            "offset": [self.offset.real, self.offset.imag],
            "residual": self.residual,
            "predicted": {k: [v.real, v.imag] for k, v in self.predicted.items()},
            "accepted_sign": self.accepted_sign,
        }


def offset_oracle(grid: GridSpec, g: SampledField, tests: Sequence[SampledField]) -> OffsetOracleResult:
    """Fit the constant c in Op_{1/2,0}(x xi) = Op_{0,0}(x xi + c) from dense quadrature matrices.

    The difference of the two matrices is tested on smooth localized functions
    f (Galerkin-style), so c is a least-squares fit of D f = c f g.  Entry-wise
    comparison is meaningless on a lattice (the discrete commutator has zero
    diagonal).  Both candidate signs of the multiplier are reported.
    """
    sym = ClosedFormSymbol(lambda x, xi, eta: x * xi + 0 * eta, "x*xi")
    M_half = bilinear_matrix(sym, (0.5, 0.0), g)
    M_kn = bilinear_matrix(sym, (0.0, 0.0), g)
    D = M_half - M_kn
    num = 0j
    den = 0.0
    diffs, basis = [], []
    for f in tests:
        d = D @ f.values
        b = f.values * g.values
        num += np.vdot(b, d)
        den += float(np.vdot(b, b).real)
        diffs.append(d)
        basis.append(b)
    c = num / den
    res = max(float(np.max(np.abs(d - c * b))) / float(np.max(np.abs(b))) for d, b in zip(diffs, basis))
    # x xi converted with b^ = exp(s i (1/2) y zeta) a^ gives x xi - s i/2
    predicted = {"+1": -0.5j, "-1": 0.5j}
    sign = +1 if abs(c - predicted["+1"]) < abs(c - predicted["-1"]) else -1
    return OffsetOracleResult(complex(c), res, predicted, sign)


@dataclass
class EquivalenceReport:
    pair_from: QuantizationPair
    pair_to: QuantizationPair
    rel_error: float
    test_battery_id: str
    passed: bool
    tolerance: float = 1e-7
    reference: str = "kn"

    def to_json(self) -> dict:
        return {
            "pair_from": self.pair_from.to_json(),
            "pair_to": self.pair_to.to_json(),
            "rel_error": self.rel_error,
            "test_battery_id": self.test_battery_id,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "reference": self.reference,
        }


def relative_l2(x: np.ndarray, ref: np.ndarray) -> float:
    den = float(np.linalg.norm(ref))
    return float(np.linalg.norm(x - ref)) / (den if den > 0 else 1.0)


def verify_invariance(
    a,
    pairs: Sequence,
    battery: Sequence[tuple[SampledField, SampledField]],
    tolerance: float = 1e-7,
    battery_id: str = "battery",
    reference: str = "kn",
) -> list[EquivalenceReport]:
    """Op_from(a)(f,g) against Op_to(convert(a, from, to))(f,g) over the battery.

    ``reference`` selects the pathway of the left side; the right side always
    goes through the canonical conversion pathway.  With a closed-form symbol
    and ``reference="kernel"`` the left side never touches the multiplier, so
    the discrepancy measures the discretization, not round-off.
    """
    if not battery:
        raise ValueError("battery is empty")
    sgrid = symbol_grid(battery[0][0].grid)
    a_s = _as_sampled(a, sgrid)
    reports = []
    for p_from, p_to in pairs:
        p_from, p_to = QuantizationPair.parse(p_from), QuantizationPair.parse(p_to)
        b = convert_symbol(a_s, p_from, p_to)
        # apply_bilinear(b, p_to, .) with its (p_to -> (0,0)) conversion hoisted out of the battery loop
        b0 = convert_symbol(b, p_to, KOHN_NIRENBERG).values
        worst = 0.0
        K = sheared_kernel(a, p_from, sgrid.axes[0]) if reference == "kernel" else None
        for f, g in battery:
            if K is not None:
                lhs = apply_sheared_kernel(K, f, g)
            else:
                lhs = apply_bilinear(a if reference != "kn" else a_s, p_from, f, g, pathway=reference).values
            rhs = _kn_bilinear(b0, f, g)
            worst = max(worst, relative_l2(rhs, lhs))
        reports.append(EquivalenceReport(p_from, p_to, worst, battery_id, worst <= tolerance, tolerance, reference))
    return reports


def _window_at(phi_hat: np.ndarray, grid: GridSpec, shift: Sequence[float]) -> np.ndarray:
    """phi(Y - shift) on the grid from the DFT of the zero-centered window (exact Fourier translation)."""
    phase = 1.0
    for j, ax in enumerate(grid.axes):
        k = np.fft.fftfreq(ax.points, d=1.0 / ax.points) * ax.dual_spacing
        shape = [1] * grid.rank
        shape[j] = ax.points
        phase = phase * np.exp(-1j * k * shift[j]).reshape(shape)
    return np.fft.ifftn(phi_hat * phase)


@dataclass
class CovariancePlan:
    x_index: np.ndarray  # (n, 3) integer grid indices
    z_index: np.ndarray  # (n, 3) signed dual-lattice indices

    def __len__(self):
        return len(self.x_index)


def make_covariance_plan(grid: GridSpec, count: int, seed: int = 0, x_frac: float = 0.5,
                         z_frac: float = 0.25) -> CovariancePlan:
    """Deterministic plan: X within the central ``x_frac`` of each axis, Z within the central ``z_frac`` of the dual."""
    rng = np.random.default_rng(seed)
    xs, zs = [], []
    for ax in grid.axes:
        n = ax.points
        hx = max(1, int(n * x_frac / 2))
        hz = max(1, int(n * z_frac / 2))
        xs.append(rng.integers(n // 2 - hx, n // 2 + hx, size=count))
        zs.append(rng.integers(-hz, hz + 1, size=count))
    return CovariancePlan(np.stack(xs, axis=1), np.stack(zs, axis=1))


def stft_covariance_check(a: SampledField, window: SampledField, pair, plan: CovariancePlan) -> float:
    """max |LHS - RHS| over the plan for

        |V_{phi'} a'(X, Z)| = |V_phi a(x + r y + t z, xi + r zeta, eta + t zeta, Z)|,

    a' and phi' being a and phi converted from ``pair`` to (0,0).  The left side
    is a lattice sum; the right side translates phi by the off-lattice shift
    with an exact Fourier phase.
    """
    if len(plan) == 0:
        raise ValueError("sample plan is empty")
    pair = QuantizationPair.parse(pair)
    a.require_same_grid(window)
    grid = a.grid
    a2 = convert_symbol(a, pair, KOHN_NIRENBERG)
    phi2 = convert_symbol(window, pair, KOHN_NIRENBERG)
    coords = [ax.coords() for ax in grid.axes]
    mesh = grid.mesh()
    scale = grid.cell_volume * (2 * np.pi) ** (-1.5)
    from .symbols import separable_factors

    factors = separable_factors(window)
    if factors is not None:
        f_hat = [np.fft.fft(np.fft.ifftshift(f)) for f in factors]
    else:
        phi_hat = np.fft.fftn(np.fft.ifftshift(window.values))
    worst = 0.0
    for xi_idx, zi in zip(plan.x_index, plan.z_index):
        X = np.array([coords[j][xi_idx[j]] for j in range(3)])
        Z = np.array([zi[j] * grid.axes[j].dual_spacing for j in range(3)])
        # lattice translate of phi' by X: roll the centered array
        shifted = np.roll(phi2.values, tuple(int(xi_idx[j] - grid.axes[j].points // 2) for j in range(3)), (0, 1, 2))
        wave = np.exp(-1j * sum(m * z for m, z in zip(mesh, Z)))
        lhs = abs(np.sum(a2.values * np.conj(shifted) * wave)) * scale
        zeta, y, z = Z
        Xs = X + np.array([pair.r * y + pair.t * z, pair.r * zeta, pair.t * zeta])
        if factors is not None:
            u = [np.conj(np.fft.fftshift(_window_at(f_hat[j], GridSpec((grid.axes[j],)), Xs[j:j + 1])))
                 * np.exp(-1j * coords[j] * Z[j]) for j in range(3)]
            rhs = abs(np.einsum("abc,a,b,c->", a.values, *u, optimize=True)) * scale
        else:
            win = np.fft.fftshift(_window_at(phi_hat, grid, Xs))
            rhs = abs(np.sum(a.values * np.conj(win) * wave)) * scale
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


# ---------------------------------------------------------------- boundedness and GS continuity


def omega_R(R: float, powers: Sequence[float] = (1.0, 1.0)):
    """omega_R on the phase space (x, eta) of the second argument: exp(-R (|x|^p1 + |eta|^p2))."""
    from .weights import WeightGroup, WeightModel

    return WeightModel(tuple(WeightGroup((j,), -R, p) for j, p in enumerate(powers)), 2)


@dataclass
class RatioReport:
    max_ratio: float
    ratios: list
    battery_size: int
    seed: int
    pair: QuantizationPair
    note: str = "qualitative boundedness evidence; no constant asserted"

    def to_json(self) -> dict:
        d = asdict(self)
        d["pair"] = self.pair.to_json()
        return d


def boundedness_probe(
    a,
    pair,
    spec,
    w0,
    w,
    pq,
    R: float,
    battery_size: int,
    seed: int = 0,
    fgrid: GridSpec | None = None,
    window_width: float = 1.0,
    r_powers: Sequence[float] = (1.0, 1.0),
    underflow: float = 1e-280,
) -> RatioReport:
    """Ratios ||Op(a)(f,g)||_{M^{p,q}_(w)} / (||f||_{M^{p,q}_(w0 w)} ||g||_{M^{inf,inf}_(1/omega_R)})
    over all ordered pairs (f, g) drawn from a seeded battery of ``battery_size`` Gaussian atoms.

    The battery is nested in the seed, so a larger battery contains the smaller one.
    ``spec`` is carried for the report only; the class enters through ``a``.
    """
    from .batteries import gaussian_atoms, gaussian_window
    from .timefreq import MixedExponents, modulation_norms

    pair = QuantizationPair.parse(pair)
    if fgrid is None:
        if isinstance(a, SampledField):
            fgrid = a.grid.sub((0,))
        else:
            raise GridError("a closed-form symbol needs fgrid")
    ax = fgrid.axes[0]
    a0 = convert_symbol(_as_sampled(a, symbol_grid(fgrid)), pair, KOHN_NIRENBERG).values
    phi = gaussian_window(fgrid, window_width)
    atoms = np.array([atom.sample(fgrid).values for atom in gaussian_atoms(fgrid, battery_size, seed)])

    nf = modulation_norms(atoms, phi, w0 * w, pq)
    ng = modulation_norms(atoms, phi, omega_R(R, r_powers).inverse(), MixedExponents(math.inf, math.inf))
    if min(nf.min(), ng.min()) < underflow:
        raise FloatingPointError("input norm below the division guard")

    E = _exp_kernel(ax)
    hats = forward_ft_array(atoms, GridSpec((ax,) * 2), (1,))  # rows: transforms of the atoms
    c = ax.dual_spacing**2 / (2 * math.pi)
    ratios = np.empty((battery_size, battery_size))
    for i in range(battery_size):
        # M[j, l] = sum_k a0[j, k, l] e^{i x_j xi_k} fhat_k; then contract l against every g at once
        M = np.einsum("jkl,jk->jl", a0, E * hats[i][None, :], optimize=True) * E
        out = (M @ hats.T).T * c
        ratios[i] = modulation_norms(out, phi, w, pq) / (nf[i] * ng)
    flat = ratios.ravel()
    return RatioReport(float(flat.max()), [float(r) for r in flat], battery_size, seed, pair)


class GateRejection(ValueError):
    pass


def _zero_report(powers, r_min):
    from .timefreq import DecayFitReport

    return DecayFitReport(rates=[None] * len(powers), powers=list(powers), log_prefactor=-math.inf, residual=0.0,
                          passed=True, common_rate=None, r_min=r_min,
                          note="output below the roundoff level of the computation; numerically zero")


def gs_continuity_check(
    a,
    pair,
    s: float,
    sigma: float,
    battery: Sequence[tuple[SampledField, SampledField]],
    r_min: float = 1e-3,
    window_width: float = 1.0,
    center: str = "peak",
    rel_noise: float = 1e-14,
):
    """Decay fits of Op_{r,t}(a)(f,g) in S_s^sigma for a battery whose members pass the same fit.

    Raises GateRejection naming the first battery member that fails the input gate.
    Output samples below ``rel_noise`` times the a-priori bound
    sup|a| ||f^||_1 ||g^||_1 ||phi||_1 (2 pi)^(-3/2) are roundoff and excluded.
    """
    from .batteries import gaussian_window
    from .timefreq import DegenerateInputError, fit_gs_decay, stft

    pair = QuantizationPair.parse(pair)
    powers = [1.0 / s, 1.0 / sigma]
    fgrid = battery[0][0].grid
    ax = fgrid.axes[0]
    phi = gaussian_window(fgrid, window_width)
    for i, (f, g) in enumerate(battery):
        for name, u in (("f", f), ("g", g)):
            rep = fit_gs_decay(stft(u, phi), powers, r_min=r_min, center=center)
            if not rep.passed:
                raise GateRejection(f"battery member {i} ({name}) fails the S_s^sigma input gate: rates {rep.rates}")
    a0 = convert_symbol(_as_sampled(a, symbol_grid(fgrid)), pair, KOHN_NIRENBERG).values
    phi_l1 = np.sum(np.abs(phi.values)) * ax.spacing
    sup_a = float(np.max(np.abs(a0)))
    reports = []
    for f, g in battery:
        l1 = [np.sum(np.abs(forward_ft(u).values)) * ax.dual_spacing for u in (f, g)]
        bound = sup_a * l1[0] * l1[1] * phi_l1 * (2 * math.pi) ** -1.5
        out = SampledField(fgrid, _kn_bilinear(a0, f, g))
        try:
            rep = fit_gs_decay(stft(out, phi), powers, r_min=r_min, center=center,
                               noise_log=math.log(rel_noise * bound) if bound > 0 else None)
        except DegenerateInputError:
            rep = _zero_report(powers, r_min)
        reports.append(rep)
    return reports
