"""Parametric moderate weights, moderation checks and Gaussian smoothing of weights.

A weight is a product over axis groups ``g`` of

    (1 + |X_g|^2)^(t_g/2) * exp(c_g |X_g|^(1/s_g))

evaluated in log space.  Products and quotients of models stay closed form,
which is what the weight algebra in the continuity results needs.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .lattice import GridSpec, SampledField

LOG_OVERFLOW = 700.0


class WeightOverflowError(OverflowError):
    pass


class BoundaryContaminationError(ValueError):
    pass


@dataclass(frozen=True)
class WeightGroup:
    axes: tuple[int, ...]
    exp_rate: float = 0.0
    inv_exp_power: float = 1.0
    poly_degree: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(int(a) for a in self.axes))
        if not self.axes:
            raise ValueError("a weight group needs at least one axis")
        if not self.inv_exp_power > 0:
            raise ValueError("inv_exp_power (1/s) must be positive")

    def log_value(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        r2 = sum(np.abs(coords[a]) ** 2 for a in self.axes)
        out = 0.5 * self.poly_degree * np.log1p(r2) if self.poly_degree else np.zeros_like(r2, dtype=float)
        if self.exp_rate:
            out = out + self.exp_rate * np.sqrt(r2) ** self.inv_exp_power
        return out


@dataclass(frozen=True)
class WeightModel:
    """Product of group factors; factors may share axes, so products and quotients stay exact."""

    groups: tuple[WeightGroup, ...] = ()
    arity: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        used = [a for g in self.groups for a in g.axes]
        if self.arity is not None and used and max(used) >= self.arity:
            raise ValueError("group axis beyond model arity")

    @classmethod
    def unit(cls, arity: int | None = None) -> "WeightModel":
        return cls((), arity)

    @classmethod
    def single(cls, arity: int = 1, exp_rate=0.0, inv_exp_power=1.0, poly_degree=0.0) -> "WeightModel":
        return cls((WeightGroup(tuple(range(arity)), exp_rate, inv_exp_power, poly_degree),), arity)

    @classmethod
    def per_axis(cls, exp_rates, inv_exp_powers, poly_degrees=None) -> "WeightModel":
        n = len(exp_rates)
        poly_degrees = poly_degrees if poly_degrees is not None else [0.0] * n
        return cls(
            tuple(WeightGroup((j,), exp_rates[j], inv_exp_powers[j], poly_degrees[j]) for j in range(n)), n
        )

    @property
    def is_polynomial_type(self) -> bool:
        return all(g.exp_rate == 0 for g in self.groups)

    def log_value(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(np.broadcast_shapes(*[np.shape(c) for c in coords]) if len(coords) else ())
        for g in self.groups:
            out = out + g.log_value(coords)
        return out

    def __call__(self, *coords) -> np.ndarray:
        lv = self.log_value(coords)
        if np.any(np.abs(lv) > LOG_OVERFLOW):
            raise WeightOverflowError("weight value beyond double-precision range")
        return np.exp(lv)

    def _joint_arity(self, other: "WeightModel"):
        if self.arity is not None and other.arity is not None and self.arity != other.arity:
            raise ValueError("weights of different arity cannot be combined")
        return self.arity if self.arity is not None else other.arity

    def __mul__(self, other: "WeightModel") -> "WeightModel":
        return WeightModel(self.groups + other.groups, self._joint_arity(other))

    def __truediv__(self, other: "WeightModel") -> "WeightModel":
        return WeightModel(self.groups + other.inverse().groups, self._joint_arity(other))

    def inverse(self) -> "WeightModel":
        return WeightModel(
            tuple(WeightGroup(g.axes, -g.exp_rate, g.inv_exp_power, -g.poly_degree) for g in self.groups), self.arity
        )

    def restrict_to_zero(self, keep: Sequence[int]) -> "WeightModel":
        """The weight on the ``keep`` axes with every other axis frozen at 0."""
        remap = {a: j for j, a in enumerate(keep)}
        groups = []
        for g in self.groups:
            axes = tuple(remap[a] for a in g.axes if a in remap)
            if axes:
                groups.append(WeightGroup(axes, g.exp_rate, g.inv_exp_power, g.poly_degree))
        return WeightModel(tuple(groups), len(keep))

    def to_json(self) -> dict:
        return {
            "groups": [
                {"axes": list(g.axes), "exp_rate": g.exp_rate, "inv_exp_power": g.inv_exp_power,
                 "poly_degree": g.poly_degree}
                for g in self.groups
            ],
            "arity": self.arity,
        }

    @classmethod
    def from_json(cls, data) -> "WeightModel":
        if isinstance(data, str):
            data = json.loads(data)
        groups = tuple(
            WeightGroup(
                tuple(g["axes"]), g.get("exp_rate", 0.0), g.get("inv_exp_power", 1.0), g.get("poly_degree", 0.0)
            )
            for g in data.get("groups", [])
        )
        return cls(groups, data.get("arity"))


def evaluate(w: WeightModel, grid: GridSpec) -> SampledField:
    if w.arity is not None and w.arity != grid.rank:
        raise ValueError(f"weight arity {w.arity} does not match grid rank {grid.rank}")
    lv = np.broadcast_to(w.log_value(grid.mesh()), grid.shape)
    if np.any(np.abs(lv) > LOG_OVERFLOW):
        raise WeightOverflowError("weight value beyond double-precision range on this grid")
    return SampledField(grid, np.exp(lv))


@dataclass
class ModerationReport:
    constant: float
    submultiplicative_rate: float
    passed: bool
    samples_tested: int
    nested_constants: list[float] = field(default_factory=list)
    growth_detected: bool = False
    note: str = "non-moderate detection is a heuristic over nested boxes"

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _sample_box(box: GridSpec, n: int, rng, scale: float = 1.0) -> list[np.ndarray]:
    return [rng.uniform(-scale * ax.half_width, scale * ax.half_width, size=n) for ax in box.axes]


def check_moderate(
    w: WeightModel,
    v: WeightModel,
    sample_count: int = 10_000,
    box: GridSpec | None = None,
    seed: int = 0,
    nested_scales: Sequence[float] = (0.25, 0.5, 1.0),
    growth_tol: float = 0.25,
) -> ModerationReport:
    """Empirical constant in w(X+Y) <= C w(X) v(Y) over deterministic random pairs.

    The constant is evaluated on nested boxes as well; a log-constant that keeps
    growing with the box is reported as (heuristic) non-moderation.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if box is None:
        box = GridSpec.uniform(10.0, 2, w.arity or 1)
    logs = []
    for scale in nested_scales:
        rng = np.random.default_rng(seed)
        X = _sample_box(box, sample_count, rng, scale)
        Y = _sample_box(box, sample_count, rng, scale)
        XY = [a + b for a, b in zip(X, Y)]
        ratio = w.log_value(XY) - w.log_value(X) - v.log_value(Y)
        logs.append(float(np.max(ratio)))
    log_c = logs[-1]
    finite = log_c < LOG_OVERFLOW
    growth = any(b - a > growth_tol * (1.0 + abs(a)) for a, b in zip(logs, logs[1:]))
    # rate r with v(Y) <= exp(r |Y|) on the box, the submultiplicative growth bound
    rng = np.random.default_rng(seed + 1)
    Y = _sample_box(box, sample_count, rng)
    rad = np.sqrt(sum(y**2 for y in Y))
    rate = float(np.max(v.log_value(Y) / np.maximum(rad, 1e-12)))
    return ModerationReport(
        constant=float(math.exp(min(log_c, LOG_OVERFLOW))),
        submultiplicative_rate=rate,
        passed=bool(finite and not growth),
        samples_tested=sample_count,
        nested_constants=[float(math.exp(min(l, LOG_OVERFLOW))) for l in logs],
        growth_detected=bool(growth),
    )


def gaussian_mollifier(grid: GridSpec, width: float) -> np.ndarray:
    """phi = |phi0|^2 for the centered Gaussian phi0 = exp(-|X|^2/(2 width^2)), unit mass on the grid."""
    r2 = sum(c**2 for c in grid.mesh())
    phi = np.broadcast_to(np.exp(-r2 / width**2), grid.shape)
    return phi / (phi.sum() * grid.cell_volume)


def _extended_grid(grid: GridSpec) -> GridSpec:
    # same spacing, twice the extent: the closed-form weight is known outside the box
    return GridSpec.from_pairs((2 * ax.half_width, 2 * ax.points) for ax in grid.axes)


def _crop_center(values: np.ndarray, shape) -> np.ndarray:
    return values[tuple(slice(n // 2, n // 2 + n) for n in shape)]


def _convolve_weight(w: "WeightModel", grid: GridSpec, kernel_fn) -> np.ndarray:
    """(omega * kernel) on ``grid``, with omega sampled on a doubled box so nothing wraps into the box."""
    ext = _extended_grid(grid)
    lw = np.broadcast_to(w.log_value(ext.mesh()), ext.shape)
    shift = float(lw.max())
    if shift - float(_crop_center(lw, grid.shape).min()) > LOG_OVERFLOW:
        raise WeightOverflowError("weight dynamic range too large for the grid")
    kern = np.fft.ifftshift(kernel_fn(ext))
    conv = np.fft.ifftn(np.fft.fftn(np.exp(lw - shift)) * np.fft.fftn(kern)).real * ext.cell_volume
    return _crop_center(conv, grid.shape), shift


def mollifier_width(s_vector: Sequence[float]) -> float:
    # Gaussians are admissible for every s in (0,1); the width only sets the smoothing scale
    return 1.0


def smooth_weight(
    w: WeightModel,
    s_vector: Sequence[float],
    grid: GridSpec,
    width: float | None = None,
    region: float | None = None,
) -> SampledField:
    """omega_0 = omega * phi with phi a unit-mass Gaussian, by FFT convolution.

    The closed-form weight is sampled on a box twice as large so the cyclic
    convolution never wraps into the output region.
    """
    if any(not 0 < s < 1 for s in s_vector):
        raise ValueError("smoothing exponents must lie in (0, 1)")
    if len(s_vector) not in (1, grid.rank):
        raise ValueError("one exponent per axis (or a single shared one) is required")
    width = mollifier_width(s_vector) if width is None else width
    margin = 4.0 * width
    region = min(ax.half_width for ax in grid.axes) - margin if region is None else region
    if min(ax.half_width for ax in grid.axes) - region < margin or region <= 0:
        raise BoundaryContaminationError(
            f"grid half-width must exceed the region of interest by {margin:.3g} (4 mollifier widths)"
        )
    conv, shift = _convolve_weight(w, grid, lambda g: gaussian_mollifier(g, width))
    conv = np.maximum(conv, np.finfo(float).tiny)
    return SampledField(grid, np.exp(np.log(conv) + shift))


def interior_mask(grid: GridSpec, region: float) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for c in grid.mesh():
        mask = mask & (np.abs(c) <= region)
    return mask


def ratio_bound(w0: SampledField, w: WeightModel, region: float) -> float:
    """Smallest C with 1/C <= w0/w <= C on the interior region."""
    mask = interior_mask(w0.grid, region)
    lr = np.log(w0.values.real) - np.broadcast_to(w.log_value(w0.grid.mesh()), w0.grid.shape)
    return float(np.exp(np.max(np.abs(lr[mask]))))


def hermite_gaussian_derivative(grid: GridSpec, width: float, orders: Sequence[int]) -> np.ndarray:
    """Analytic mixed derivative of the normalized mollifier exp(-|X|^2/width^2)."""
    from numpy.polynomial.hermite import hermval

    phi = gaussian_mollifier(grid, width)
    out = phi
    for axis, k in enumerate(orders):
        if k:
            u = grid.mesh()[axis] / width
            coef = np.zeros(k + 1)
            coef[k] = 1.0
            # d^k/du^k exp(-u^2) = (-1)^k H_k(u) exp(-u^2)
            out = out * ((-1) ** k * hermval(u, coef) / width**k)
    return out


def smoothed_derivative(w: WeightModel, grid: GridSpec, orders: Sequence[int], width: float = 1.0) -> SampledField:
    """Derivative of omega * phi computed as omega * (derivative of phi)."""
    conv, shift = _convolve_weight(w, grid, lambda g: hermite_gaussian_derivative(g, width, orders))
    return SampledField(grid, conv * math.exp(shift))


@dataclass
class DerivativeBoundReport:
    h_fit: float
    per_order: dict
    s_vector: list
    passed: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def fit_derivative_bound(
    w: WeightModel,
    s_vector: Sequence[float],
    grid: GridSpec,
    max_order: int = 2,
    width: float = 1.0,
    region: float | None = None,
    reference: str = "smoothed",
) -> DerivativeBoundReport:
    """Fit h in |d^alpha omega_0| <= h^|alpha| alpha!^s * ref on the interior, ref = omega_0 or omega."""
    region = min(ax.half_width for ax in grid.axes) - 4.0 * width if region is None else region
    mask = interior_mask(grid, region)
    w0 = smooth_weight(w, s_vector, grid, width=width, region=region)
    ref = w0.values.real if reference == "smoothed" else np.broadcast_to(w(*grid.mesh()), grid.shape)
    svec = list(s_vector) * grid.rank if len(s_vector) == 1 else list(s_vector)
    per_order = {}
    h = 0.0
    from itertools import product

    for orders in product(range(max_order + 1), repeat=grid.rank):
        total = sum(orders)
        if total == 0 or total > max_order:
            continue
        d = smoothed_derivative(w, grid, orders, width).values
        log_fact = sum(s * gammaln(k + 1) for s, k in zip(svec, orders))
        sup = float(np.max(np.abs(d[mask]) / ref[mask]))
        h_k = math.exp((math.log(max(sup, 1e-300)) - log_fact) / total)
        per_order[",".join(map(str, orders))] = {"sup_ratio": sup, "h": h_k}
        h = max(h, h_k)
    return DerivativeBoundReport(h, per_order, svec, bool(np.isfinite(h)))
