"""Deterministic test batteries: functions, symbols and windows.

Everything here is reproducible from (generator name, parameters, seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import GridSpec, SampledField
from .quantization import ClosedFormSymbol, symbol_grid


@dataclass(frozen=True)
class GaussianAtom:
    center: float
    width: float
    modulation: float = 0.0

    def __call__(self, x):
        return np.exp(-((x - self.center) ** 2) / (2 * self.width**2) + 1j * self.modulation * x)

    def sample(self, grid: GridSpec) -> SampledField:
        return SampledField.from_function(grid, self)

    def to_json(self) -> dict:
        return {"center": self.center, "width": self.width, "modulation": self.modulation}


def gaussian_atoms(grid: GridSpec, count: int, seed: int = 0, widths=(0.5, 2.0)) -> list[GaussianAtom]:
    """Centers in [-L/3, L/3], widths in ``widths``, modulations in the central half of the dual lattice."""
    rng = np.random.default_rng(seed)
    ax = grid.axes[0]
    L = ax.half_width
    kmax = ax.dual().half_width / 2
    return [
        GaussianAtom(float(rng.uniform(-L / 3, L / 3)), float(rng.uniform(*widths)), float(rng.uniform(-kmax, kmax)))
        for _ in range(count)
    ]


def pair_battery(grid: GridSpec, count: int, seed: int = 0, param_grid: GridSpec | None = None):
    """``count`` (f, g) pairs of Gaussian atoms; parameters drawn against ``param_grid`` (default: grid)
    so the same continuous battery can be resampled on a finer grid."""
    atoms = gaussian_atoms(param_grid or grid, 2 * count, seed)
    return [(atoms[2 * i].sample(grid), atoms[2 * i + 1].sample(grid)) for i in range(count)]


def self_dual_grid(points: int, rank: int = 1) -> GridSpec:
    """Half-width L = sqrt(N pi / 2): the lattice coincides with its own dual."""
    return GridSpec.uniform(math.sqrt(points * math.pi / 2), points, rank)


def gaussian_window(grid: GridSpec, width: float = 1.0) -> SampledField:
    r2 = sum(c**2 for c in grid.mesh())
    return SampledField(grid, np.broadcast_to(np.exp(-r2 / (2 * width**2)), grid.shape).astype(complex))


# ---------------------------------------------------------------- symbols for the invariance suite


def invariance_symbols() -> list[ClosedFormSymbol]:
    """Five Gaussian-localized symbols whose x-resolution at N=64, L=12 sits between 1e-10 and 1e-8."""

    def g(x, xi, eta, sx=0.8, c=0.0, k=0.0, s=2.0):
        return np.exp(-((x - c) ** 2) / (2 * sx**2) - ((xi - k) ** 2 + eta**2) / (2 * s**2))

    return [
        ClosedFormSymbol(lambda x, xi, eta: g(x, xi, eta), "gauss"),
        ClosedFormSymbol(lambda x, xi, eta: g(x, xi, eta, sx=0.85) * (1 + 0.3j * xi - 0.2 * eta * x), "gauss_poly"),
        ClosedFormSymbol(lambda x, xi, eta: g(x, xi, eta, sx=0.8, c=1.0, k=1.0) * np.cos(xi + eta), "gauss_cos"),
        ClosedFormSymbol(lambda x, xi, eta: g(x, xi, eta, sx=0.85, s=1.5) * np.exp(0.8j * x), "gauss_mod"),
        ClosedFormSymbol(
            lambda x, xi, eta: np.exp(-(x**2) / (2 * 0.8**2) - xi**2 / 4 - (eta + 0.5) ** 2 / 6 + 0.25 * x * eta),
            "gauss_skew",
        ),
    ]


INVARIANCE_PAIRS = [((0, 0), (0.5, 0.5)), ((0.5, 0.5), (0, 0)), ((0.5, 0), (0, 0.5)), ((1 / 3, 1 / 3), (1, 0))]


# ---------------------------------------------------------------- quadrature-oracle cases


def oracle_symbols(L: float) -> dict[str, ClosedFormSymbol]:
    def base(x, xi, eta):
        return np.exp(-(x**2) / 2 - (xi**2 + eta**2) / (2 * 1.3**2))

    return {
        "gauss": ClosedFormSymbol(base, "gauss"),
        "gauss_poly": ClosedFormSymbol(lambda x, xi, eta: base(x, xi, eta) * (1 + 0.3j * xi - 0.2 * eta), "gauss_poly"),
        "cos_x": ClosedFormSymbol(
            lambda x, xi, eta: np.cos(np.pi * x / L) * np.exp(-(xi**2 + eta**2) / (2 * 1.3**2)), "cos_x"
        ),
        "aniso": ClosedFormSymbol(lambda x, xi, eta: np.exp(-(x**2) / 2 - xi**2 / 2 - eta**2 / 4), "aniso"),
    }


ORACLE_CASES = [
    ("gauss", (0.5, 0.5)),
    ("gauss", (1 / 3, 1 / 3)),
    ("gauss", (0.25, 0.5)),
    ("gauss_poly", (0.5, 0.0)),
    ("gauss_poly", (0.5, 0.5)),
    ("cos_x", (0.5, 0.5)),
    ("cos_x", (1 / 3, 1 / 3)),
    ("aniso", (0.5, 0.0)),
    ("aniso", (0.0, 0.5)),
    ("gauss", (1.0, 0.0)),
]


def oracle_functions(grid: GridSpec):
    x = grid.coords(0)
    f = SampledField(grid, np.exp(-((x - 0.3) ** 2) / 0.8))
    g = SampledField(grid, np.exp(-((x + 0.2) ** 2) / 1.0 + 0.7j * x))
    return f, g


# ---------------------------------------------------------------- class battery


@dataclass(frozen=True)
class ClassCase:
    name: str
    symbol: SampledField
    in_class: bool
    axis: str = ""


def _gauss3(x, xi, eta, wx=1.0, wxi=1.0, weta=1.0):
    return np.exp(-(x**2) / (2 * wx**2) - xi**2 / (2 * wxi**2) - eta**2 / (2 * weta**2))


def class_battery(grid: GridSpec, n_osc: float | None = None) -> list[ClassCase]:
    """Six smooth symbols and six with a full-amplitude exp(i n_osc |.|) injection.

    n_osc defaults to 3/4 of the smallest Nyquist frequency, inside (K/2, K).
    """
    if n_osc is None:
        n_osc = 0.75 * min(ax.dual().half_width for ax in grid.axes)
    X, XI, ETA = grid.mesh()
    G = _gauss3(X, XI, ETA)

    def field(vals):
        return SampledField(grid, np.broadcast_to(vals, grid.shape).astype(complex), ("space", "frequency", "frequency"))

    def inject(arg):
        return G * (1 + np.exp(1j * n_osc * np.abs(arg)))

    smooth = [
        ClassCase("constant", field(np.ones(grid.shape)), True),
        ClassCase("gauss", field(G), True),
        ClassCase("gauss_poly", field((1 + 0.2 * X * XI * ETA) * G), True),
        ClassCase("gauss_modulated", field(np.exp(1j * (X + 0.5 * XI)) * G), True),
        ClassCase("gauss_aniso", field(_gauss3(X, XI, ETA, 1.4, 0.8, 1.2)), True),
        ClassCase("gauss_cos", field(np.cos(0.5 * X * XI) * G), True),
    ]
    rough = [
        ClassCase("osc_x", field(inject(X)), False, "x"),
        ClassCase("osc_xi", field(inject(XI)), False, "xi"),
        ClassCase("osc_eta", field(inject(ETA)), False, "eta"),
        ClassCase("osc_x_plus_xi", field(inject(X + XI)), False, "x,xi"),
        ClassCase("osc_shifted_x", field(inject(X - 1.0)), False, "x"),
        ClassCase("osc_xi_plus_eta", field(inject(XI + ETA)), False, "xi,eta"),
    ]
    return smooth + rough


def symbol_on(fgrid: GridSpec, sym: ClosedFormSymbol) -> SampledField:
    return sym.sample(symbol_grid(fgrid))
