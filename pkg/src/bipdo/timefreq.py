"""Short-time Fourier transform, inversion, weighted mixed norms and decay fits.

Window translation is cyclic, which keeps the Moyal and inversion identities
exact on the grid:

    V_phi f(x, xi) = (2 pi)^(-m/2) sum_y f(y) conj(phi(y - x)) exp(-i y.xi) dy
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .lattice import FREQUENCY, SPACE, GridError, GridSpec, SampledField, forward_ft_array, inverse_ft_array
from .weights import WeightModel

# full phase-space tensors beyond this many samples go through stft_at instead
MAX_DENSE_STFT = 1 << 24
DEFAULT_FLOOR = 1e-14
DEFAULT_R_MIN = 1e-3


class WindowMismatchWarning(UserWarning):
    pass


class DegenerateInputError(ValueError):
    pass


def window_id(window: SampledField) -> str:
    h = hashlib.sha256()
    h.update(repr(window.grid.to_json()).encode())
    h.update(np.ascontiguousarray(window.values).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class PhaseSpaceField:
    base: SampledField
    window_id: str

    @property
    def m(self) -> int:
        return self.base.rank // 2

    @property
    def grid(self) -> GridSpec:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def space_grid(self) -> GridSpec:
        return self.base.grid.sub(range(self.m))

    def with_values(self, values) -> "PhaseSpaceField":
        return PhaseSpaceField(self.base.with_values(values), self.window_id)


@dataclass(frozen=True)
class MixedExponents:
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        for v in (self.p, self.q):
            if not (v >= 1 or math.isinf(v)):
                raise ValueError(f"mixed-norm exponents must lie in [1, inf], got {v}")

    @classmethod
    def parse(cls, p, q=None) -> "MixedExponents":
        def conv(v):
            if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "∞"):
                return math.inf
            return float(v)

        p = conv(p)
        return cls(p, p if q is None else conv(q))

    def to_json(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v  # noqa: E731
        return {"p": enc(self.p), "q": enc(self.q)}


def _cyclic_offsets(n: int) -> np.ndarray:
    # index of y_i - x_j in the centered grid: (i - j + n/2) mod n, laid out as [j, i]
    j = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    return (i - j + n // 2) % n


def _translated_windows(window: SampledField) -> np.ndarray:
    """Array W[x..., y...] = phi(y - x) with cyclic translation."""
    m = window.rank
    index = []
    for axis, ax in enumerate(window.grid.axes):
        off = _cyclic_offsets(ax.points)
        shape = [1] * (2 * m)
        shape[axis] = ax.points
        shape[m + axis] = ax.points
        index.append(off.reshape(shape))
    return window.values[tuple(index)]


def stft(f: SampledField, window: SampledField) -> PhaseSpaceField:
    f.require_same_grid(window)
    if not np.any(window.values):
        raise ValueError("window is identically zero")
    m = f.rank
    if f.grid.size**2 > MAX_DENSE_STFT:
        raise GridError("phase-space tensor too large for a dense STFT; evaluate with stft_at")
    prod = np.conj(_translated_windows(window)) * f.values.reshape((1,) * m + f.grid.shape)
    joint = GridSpec(f.grid.axes + f.grid.axes)
    sel = tuple(range(m, 2 * m))
    vals = forward_ft_array(prod, joint, sel)
    roles = (SPACE,) * m + (FREQUENCY,) * m
    return PhaseSpaceField(SampledField(joint.dual(sel), vals, roles), window_id(window))


def stft_adjoint_invert(V: PhaseSpaceField, window: SampledField) -> SampledField:
    """Inversion with the (2 pi)^(-m/2) / ||phi||^2 normalization; the integral is a cell-volume sum."""
    m = V.m
    space = V.space_grid()
    window.require_same_grid(SampledField(space, np.zeros(space.shape)))
    if window.norm() == 0:
        raise ValueError("window has zero norm")
    sel = tuple(range(m, 2 * m))
    # inverse transform in xi undoes the analysis transform: gives f(y) conj(phi_ana(y - x))
    prod = inverse_ft_array(V.values, V.grid, sel)
    wins = _translated_windows(window)
    out = np.sum(prod * wins, axis=tuple(range(m))) * space.cell_volume
    norm = window.norm() ** 2
    if window_id(window) != V.window_id:
        warnings.warn("reconstruction window differs from the analysis window", WindowMismatchWarning, stacklevel=2)
    return SampledField(space, out / norm)


def stft_with_window_ratio(V: PhaseSpaceField, rec: SampledField, ana: SampledField) -> SampledField:
    """Reconstruct with a different window, rescaled by <phi_rec, phi_ana>."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowMismatchWarning)
        f = stft_adjoint_invert(V, rec)
    return f.with_values(f.values * rec.norm() ** 2 / rec.inner(ana))


def stft_at(a: SampledField, window: SampledField, Z: np.ndarray) -> np.ndarray:
    """V_phi a(X, Z) on the full X grid for each row of Z (arbitrary, not necessarily lattice, dual points).

    Returns an array of shape (len(Z), *grid.shape).  Each Z costs one cyclic correlation by FFT.
    """
    a.require_same_grid(window)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != a.rank:
        raise GridError("dual points must have one coordinate per axis")
    grid = a.grid
    mesh = grid.mesh()
    scale = grid.cell_volume * (2 * np.pi) ** (-a.rank / 2)
    # correlation: sum_Y h(Y) conj(phi(Y - X)); phi rolled so that index 0 is the zero offset
    phi0 = np.fft.ifftshift(window.values)
    Phi = np.conj(np.fft.fftn(phi0))
    out = np.empty((len(Z),) + grid.shape, dtype=complex)
    for n, z in enumerate(Z):
        phase = np.exp(-1j * sum(c * zc for c, zc in zip(mesh, z)))
        h = a.values * phase
        corr = np.fft.ifftn(np.fft.fftn(h) * Phi)
        # corr[k] = sum_i h[i] conj(phi(offset i - k)); index k = position of X
        out[n] = corr * scale
    return out


def _log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def _lp(values: np.ndarray, p: float, axes: tuple[int, ...], cell: float) -> np.ndarray:
    if math.isinf(p):
        return values.max(axis=axes)
    return (cell * np.sum(values**p, axis=axes)) ** (1.0 / p)


def mixed_norm_scaled(F: PhaseSpaceField, w: WeightModel | None, pq: MixedExponents) -> tuple[float, float]:
    """Returns (mantissa, log_scale) with norm = mantissa * exp(log_scale)."""
    m = F.m
    logv = _log_abs(F.values)
    if w is not None:
        if w.arity is not None and w.arity != 2 * m:
            raise GridError(f"weight arity {w.arity} does not match phase-space rank {2 * m}")
        logv = logv + np.broadcast_to(w.log_value(F.grid.mesh()), F.grid.shape)
    scale = float(np.max(logv))
    if not np.isfinite(scale):
        return 0.0, 0.0
    A = np.exp(logv - scale)
    cx = float(np.prod([ax.spacing for ax in F.grid.axes[:m]]))
    cxi = float(np.prod([ax.spacing for ax in F.grid.axes[m:]]))
    inner = _lp(A, pq.p, tuple(range(m)), cx)
    outer = _lp(inner, pq.q, tuple(range(m)), cxi)
    return float(outer), scale


def mixed_norm(F: PhaseSpaceField, w: WeightModel | None = None, pq: MixedExponents = MixedExponents()) -> float:
    mant, scale = mixed_norm_scaled(F, w, pq)
    if mant == 0:
        return 0.0
    log_total = math.log(mant) + scale
    if log_total > 709:
        raise OverflowError(f"mixed norm exceeds double range (log value {log_total:.1f})")
    return math.exp(log_total)


def modulation_norm(f: SampledField, window: SampledField, w: WeightModel | None = None,
                    pq: MixedExponents = MixedExponents()) -> float:
    return mixed_norm(stft(f, window), w, pq)


def modulation_norms(values: np.ndarray, window: SampledField, w: WeightModel | None = None,
                     pq: MixedExponents = MixedExponents(), chunk: int = 128) -> np.ndarray:
    """modulation_norm for a stack of rank-1 fields (rows of ``values``) sharing one window."""
    grid = window.grid
    if grid.rank != 1:
        raise GridError("batched modulation norms are implemented for one axis")
    n = grid.shape[0]
    values = np.atleast_2d(values)
    Wc = np.conj(_translated_windows(window))  # [x, y]
    stacked = GridSpec(grid.axes * 3)  # leading axis is only a batch index
    joint = GridSpec(grid.axes + grid.axes).dual((1,))
    logw = np.zeros((n, n)) if w is None else np.broadcast_to(w.log_value(joint.mesh()), (n, n))
    # plain products are safe while the weight stays well inside double range
    direct = np.max(np.abs(logw)) < 300
    weight = np.exp(logw) if direct else None
    cx, cxi = grid.axes[0].spacing, joint.axes[1].spacing
    out = np.empty(len(values))
    for s in range(0, len(values), chunk):
        V = forward_ft_array(values[s:s + chunk, None, :] * Wc[None], stacked, (2,))
        if direct:
            A = np.abs(V) * weight
            scale = np.max(A, axis=(1, 2), keepdims=True)
            scale = np.where(scale > 0, scale, 1.0)
            A = A / scale
            scale = np.log(scale)
        else:
            logv = _log_abs(V) + logw
            scale = np.max(logv, axis=(1, 2), keepdims=True)
            scale = np.where(np.isfinite(scale), scale, 0.0)
            A = np.exp(logv - scale)
        inner = _lp(A, pq.p, (1,), cx)
        outer = _lp(inner, pq.q, (1,), cxi)
        with np.errstate(divide="ignore"):
            log_total = np.log(outer) + scale[:, 0, 0]
        if np.any(log_total > 709):
            raise OverflowError("mixed norm exceeds double range")
        out[s:s + chunk] = np.exp(log_total)
    return out


@dataclass
class DecayFitReport:
    rates: list
    powers: list
    log_prefactor: float
    residual: float
    passed: bool
    common_rate: float = 0.0
    retained_points: int = 0
    r_min: float = DEFAULT_R_MIN
    beurling: dict | None = None
    note: str = "gauge |P_j| -> max(|P_j|,1)^power - 1; Beurling ladder is heuristic"

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def tail_gauge(coords: np.ndarray, powers: Sequence[float]) -> np.ndarray:
    """Per-axis Phi_j(P) = max(|P_j|, 1)^power_j - 1: zero on the unit core, monotone in the power."""
    c = np.maximum(np.abs(coords), 1.0)
    return c ** np.asarray(powers, dtype=float) - 1.0


def fit_decay_points(
    coords: np.ndarray,
    log_abs: np.ndarray,
    powers: Sequence[float],
    floor: float = DEFAULT_FLOOR,
    r_min: float = DEFAULT_R_MIN,
    log_prefactor: float | None = None,
    ladder: Sequence[tuple[float, float]] | None = None,
    center: str = "origin",
    noise_log: float | None = None,
) -> DecayFitReport:
    """Min-margin fit of log|V(P)| <= log_prefactor - r * sum_j Phi_j(P) over point samples.

    coords has shape (n, k); points more than ``floor`` (relative) below the
    maximum are treated as numerically zero and dropped.  ``center="peak"``
    measures the gauge from the location of max|V| instead of the origin,
    which makes the fitted rate translation- and modulation-invariant.
    ``noise_log`` is an absolute log floor (roundoff level of the computation
    that produced the samples); points below it are dropped as well.
    """
    coords = np.asarray(coords, dtype=float)
    log_abs = np.asarray(log_abs, dtype=float)
    if floor <= np.finfo(float).eps * 0.5:
        raise ValueError("floor must exceed machine epsilon")
    top = float(np.max(log_abs)) if log_abs.size else -np.inf
    if not np.isfinite(top):
        raise DegenerateInputError("all samples are zero")
    pref = top if log_prefactor is None else float(log_prefactor)
    cut = top + math.log(floor)
    if noise_log is not None:
        cut = max(cut, noise_log)
    keep = log_abs >= cut
    if not np.any(keep):
        raise DegenerateInputError("all samples below the numerical floor")
    if center == "peak":
        coords = coords - coords[int(np.argmax(log_abs))]
    elif center != "origin":
        raise ValueError("center must be 'origin' or 'peak'")
    P = coords[keep]
    margin = pref - log_abs[keep]
    phi = tail_gauge(P, powers)
    rates = []
    for j in range(phi.shape[1]):
        on = phi[:, j] > 0
        rates.append(float(np.min(margin[on] / phi[on, j])) if np.any(on) else math.inf)
    total = phi.sum(axis=1)
    on = total > 0
    common = float(np.min(margin[on] / total[on])) if np.any(on) else math.inf
    common = max(common, 0.0)
    rates = [max(r, 0.0) for r in rates]
    model = pref - (common if np.isfinite(common) else 0.0) * total
    residual = float(np.max(log_abs[keep] - model))
    passed = bool(all(r >= r_min for r in rates) and common >= r_min)
    beurling = None
    if ladder:
        steps = []
        for radius, threshold in ladder:
            inside = np.all(np.abs(P) <= radius, axis=1) & on
            r = float(np.min(margin[inside] / total[inside])) if np.any(inside) else math.inf
            steps.append({"radius": radius, "threshold": threshold, "rate": r, "pass": bool(r >= threshold)})
        beurling = {"steps": steps, "pass": all(s["pass"] for s in steps), "heuristic": True}
    return DecayFitReport(
        rates=[r if np.isfinite(r) else None for r in rates],
        powers=[float(p) for p in powers],
        log_prefactor=pref,
        residual=residual,
        passed=passed,
        common_rate=common if np.isfinite(common) else None,
        retained_points=int(keep.sum()),
        r_min=r_min,
        beurling=beurling,
    )


def phase_space_points(F: PhaseSpaceField | SampledField) -> np.ndarray:
    grid = F.grid
    mesh = np.meshgrid(*[ax.coords() for ax in grid.axes], indexing="ij")
    return np.stack([c.ravel() for c in mesh], axis=1)


def fit_gs_decay(
    V: PhaseSpaceField | SampledField,
    powers: Sequence[float],
    floor: float = DEFAULT_FLOOR,
    r_min: float = DEFAULT_R_MIN,
    ladder: Sequence[tuple[float, float]] | None = None,
    center: str = "origin",
    noise_log: float | None = None,
) -> DecayFitReport:
    """Gelfand-Shilov decay fit of |V| over the whole phase-space grid; powers are 1/s_j then 1/sigma_j."""
    if len(powers) != V.grid.rank:
        raise ValueError("one power per phase-space axis is required")
    return fit_decay_points(phase_space_points(V), _log_abs(V.values).ravel(), powers, floor, r_min, ladder=ladder,
                            center=center, noise_log=noise_log)
