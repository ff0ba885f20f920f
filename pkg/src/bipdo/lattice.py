"""Centered periodized grids and the continuous-convention Fourier transform.

Every axis samples ``[-L, L)`` with an even number of points ``N``.  The dual
lattice is ``xi_k = k*pi/L`` for ``k = -N/2 .. N/2-1`` so that

    F f(xi_k) = (2 pi)^(-1/2) dx sum_j f(x_j) exp(-i x_j xi_k)

is a phase-decorated FFT, and the dual of the dual lattice is the original one.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SPACE = "space"
FREQUENCY = "frequency"

MAX_DERIVATIVE_ORDER = 8


class GridError(ValueError):
    pass


class AliasingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AxisSpec:
    half_width: float
    points: int

    def __post_init__(self):
        if not self.half_width > 0 or not np.isfinite(self.half_width):
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.points <= 0 or self.points % 2:
            raise GridError(f"points must be a positive even integer, got {self.points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def dual_spacing(self) -> float:
        return np.pi / self.half_width

    def coords(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points)

    def indices(self) -> np.ndarray:
        """Signed lattice indices -N/2 .. N/2-1."""
        return np.arange(self.points) - self.points // 2

    def dual(self) -> "AxisSpec":
        return AxisSpec(self.points * np.pi / (2.0 * self.half_width), self.points)

    def matches(self, other: "AxisSpec", rtol: float = 1e-12) -> bool:
        return self.points == other.points and abs(self.half_width - other.half_width) <= rtol * max(
            self.half_width, other.half_width
        )


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[AxisSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise GridError("a grid needs at least one axis")

    @classmethod
    def uniform(cls, half_width: float, points: int, rank: int = 1) -> "GridSpec":
        return cls(tuple(AxisSpec(half_width, points) for _ in range(rank)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "GridSpec":
        return cls(tuple(AxisSpec(float(L), int(N)) for L, N in pairs))

    @property
    def rank(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.points for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([ax.spacing for ax in self.axes]))

    def coords(self, axis: int) -> np.ndarray:
        return self.axes[axis].coords()

    def mesh(self) -> list[np.ndarray]:
        """Open (broadcastable) coordinate arrays, one per axis."""
        return list(np.meshgrid(*[ax.coords() for ax in self.axes], indexing="ij", sparse=True))

    def dual(self, axes: Iterable[int] | None = None) -> "GridSpec":
        sel = set(range(self.rank) if axes is None else axes)
        return GridSpec(tuple(ax.dual() if j in sel else ax for j, ax in enumerate(self.axes)))

    def sub(self, axes: Iterable[int]) -> "GridSpec":
        return GridSpec(tuple(self.axes[j] for j in axes))

    def matches(self, other: "GridSpec") -> bool:
        return self.rank == other.rank and all(a.matches(b) for a, b in zip(self.axes, other.axes))

    def to_json(self) -> list[dict]:
        return [{"L": ax.half_width, "N": ax.points} for ax in self.axes]


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: GridSpec
    values: np.ndarray
    axis_roles: tuple[str, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise GridError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite samples")
        object.__setattr__(self, "values", vals)
        roles = tuple(self.axis_roles) or (SPACE,) * self.grid.rank
        if len(roles) != self.grid.rank:
            raise GridError("one axis role per axis is required")
        object.__setattr__(self, "axis_roles", roles)

    @classmethod
    def from_function(cls, grid: GridSpec, fn, roles: Sequence[str] = ()) -> "SampledField":
        vals = np.broadcast_to(fn(*grid.mesh()), grid.shape)
        return cls(grid, np.array(vals, dtype=complex), tuple(roles))

    @property
    def rank(self) -> int:
        return self.grid.rank

    def with_values(self, values: np.ndarray) -> "SampledField":
        return SampledField(self.grid, values, self.axis_roles)

    def require_same_grid(self, other: "SampledField") -> None:
        if not self.grid.matches(other.grid):
            raise GridError("fields live on different grids")

    def __eq__(self, other):
        if not isinstance(other, SampledField):
            return NotImplemented
        return self.grid.matches(other.grid) and np.array_equal(self.values, other.values)

    def __add__(self, other: "SampledField") -> "SampledField":
        self.require_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledField") -> "SampledField":
        self.require_same_grid(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "SampledField":
        if isinstance(c, SampledField):
            self.require_same_grid(c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def norm(self, p: float = 2.0) -> float:
        """Discrete L^p norm with cell-volume weights."""
        a = np.abs(self.values)
        if np.isinf(p):
            return float(a.max())
        return float((self.grid.cell_volume * np.sum(a**p)) ** (1.0 / p))

    def inner(self, other: "SampledField") -> complex:
        self.require_same_grid(other)
        return complex(self.grid.cell_volume * np.vdot(other.values, self.values))


def _normalize_axes(sel, rank: int) -> tuple[int, ...]:
    if sel is None:
        return tuple(range(rank))
    if isinstance(sel, (int, np.integer)):
        sel = (int(sel),)
    sel = tuple(int(s) for s in sel)
    if not sel:
        raise GridError("axis selection is empty")
    if any(b <= a for a, b in zip(sel, sel[1:])):
        raise GridError(f"axis selection must be strictly increasing, got {sel}")
    if sel[0] < 0 or sel[-1] >= rank:
        raise GridError(f"axis selection {sel} out of range for rank {rank}")
    return sel


def _sign_pattern(ax: AxisSpec) -> np.ndarray:
    # (-1)^k for the signed index k; the centered phase exp(-i x_0 xi_k) with x_0 = -L
    return np.where(ax.indices() % 2 == 0, 1.0, -1.0)


def _expand(vec: np.ndarray, axis: int, rank: int) -> np.ndarray:
    shape = [1] * rank
    shape[axis] = vec.size
    return vec.reshape(shape)


def _flip_roles(roles: tuple[str, ...], sel: tuple[int, ...]) -> tuple[str, ...]:
    return tuple((FREQUENCY if r == SPACE else SPACE) if j in sel else r for j, r in enumerate(roles))


def forward_ft_array(values: np.ndarray, grid: GridSpec, sel: tuple[int, ...]) -> np.ndarray:
    out = np.fft.fftshift(np.fft.fftn(values, axes=sel), axes=sel)
    scale = 1.0
    for j in sel:
        ax = grid.axes[j]
        out = out * _expand(_sign_pattern(ax), j, grid.rank)
        scale *= ax.spacing / np.sqrt(2 * np.pi)
    return out * scale


def inverse_ft_array(values: np.ndarray, dual_grid: GridSpec, sel: tuple[int, ...]) -> np.ndarray:
    out = np.asarray(values, dtype=complex)
    scale = 1.0
    for j in sel:
        ax = dual_grid.axes[j]
        out = out * _expand(_sign_pattern(ax), j, dual_grid.rank)
        scale *= ax.spacing * ax.points / np.sqrt(2 * np.pi)
    return np.fft.ifftn(np.fft.ifftshift(out, axes=sel), axes=sel) * scale


def forward_ft(f: SampledField, sel=None) -> SampledField:
    """Continuous-convention Fourier transform along the selected axes."""
    sel = _normalize_axes(sel, f.rank)
    vals = forward_ft_array(f.values, f.grid, sel)
    return SampledField(f.grid.dual(sel), vals, _flip_roles(f.axis_roles, sel))


def inverse_ft(F: SampledField, sel=None) -> SampledField:
    sel = _normalize_axes(sel, F.rank)
    vals = inverse_ft_array(F.values, F.grid, sel)
    return SampledField(F.grid.dual(sel), vals, _flip_roles(F.axis_roles, sel))


def spectral_derivative_array(values: np.ndarray, grid: GridSpec, axis: int, order: int) -> np.ndarray:
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise GridError(f"derivative order must lie in [0, {MAX_DERIVATIVE_ORDER}], got {order}")
    if order == 0:
        return np.array(values, dtype=complex)
    ax = grid.axes[axis]
    k = np.fft.fftfreq(ax.points, d=1.0 / ax.points)
    mult = (1j * k * ax.dual_spacing) ** order
    if order % 2:
        # the unpaired Nyquist mode has no real derivative
        mult[ax.points // 2] = 0.0
    spec = np.fft.fft(values, axis=axis)
    return np.fft.ifft(spec * _expand(mult, axis, grid.rank), axis=axis)


def spectral_derivative(f: SampledField, axis: int, order: int = 1) -> SampledField:
    _normalize_axes(axis, f.rank)
    return f.with_values(spectral_derivative_array(f.values, f.grid, axis, order))


def shear_array(values: np.ndarray, grid: GridSpec, target: int, sources: Sequence[tuple[int, float]]) -> np.ndarray:
    """Samples of X -> F(x_target - sum_j c_j x_j, ...) via a linear phase in the target's dual."""
    if any(j == target for j, _ in sources):
        raise GridError("target axis cannot be its own shear source")
    rank = grid.rank
    shift = np.zeros((1,) * rank)
    for j, c in sources:
        if c:
            shift = shift + float(c) * _expand(grid.coords(j), j, rank)
    if not np.any(shift):
        return np.array(values, dtype=complex)
    reach = sum(abs(c) * grid.axes[j].half_width for j, c in sources)
    if reach > grid.axes[target].half_width:
        warnings.warn(
            f"shear reach {reach:.3g} exceeds target half-width {grid.axes[target].half_width:.3g}; "
            "periodization aliasing is possible",
            AliasingWarning,
            stacklevel=3,
        )
    ax = grid.axes[target]
    k = np.fft.fftfreq(ax.points, d=1.0 / ax.points)
    xi = k * ax.dual_spacing
    # a pure phase on every mode (Nyquist included) keeps the shear unitary and a group action
    spec = np.fft.fft(values, axis=target)
    return np.fft.ifft(spec * np.exp(-1j * _expand(xi, target, rank) * shift), axis=target)


def shear(F: SampledField, target_axis: int, source_axes: Sequence[tuple[int, float]]) -> SampledField:
    _normalize_axes(target_axis, F.rank)
    for j, _ in source_axes:
        _normalize_axes(j, F.rank)
    return F.with_values(shear_array(F.values, F.grid, target_axis, source_axes))


def translate(f: SampledField, offsets: Sequence[float]) -> SampledField:
    """Samples of x -> f(x - offsets), exact for trigonometric interpolants."""
    vals = f.values
    for j, s in enumerate(offsets):
        if s:
            ax = f.grid.axes[j]
            k = np.fft.fftfreq(ax.points, d=1.0 / ax.points) * ax.dual_spacing
            mult = np.exp(-1j * k * s)
            vals = np.fft.ifft(np.fft.fft(vals, axis=j) * _expand(mult, j, f.rank), axis=j)
    return f.with_values(vals)
