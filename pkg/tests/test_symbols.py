import math

import numpy as np
import pytest

from bipdo.batteries import class_battery, gaussian_window, self_dual_grid
from bipdo.lattice import GridError, GridSpec, SampledField
from bipdo.symbols import (
    BEURLING,
    ClassThresholds,
    GevreyClassSpec,
    _batch_stft,
    evaluate_plan,
    gamma_norm_estimate,
    make_sampling_plan,
    modspace_class_check,
    modspace_verdict,
    partial_symbol,
    separable_factors,
    stft_class_check,
    sup_form,
)
from bipdo.weights import WeightModel

ROLES = ("space", "frequency", "frequency")
G16 = self_dual_grid(16, 3)


def sym(fn, grid=G16):
    return SampledField.from_function(grid, fn, ROLES)


def gauss(x, xi, eta):
    return np.exp(-(x**2 + xi**2 + eta**2) / 2)


@pytest.fixture(scope="module")
def plan16():
    return make_sampling_plan(G16, batch=256, seed=0)


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        GevreyClassSpec(sigma1=0)
    with pytest.raises(ValueError):
        GevreyClassSpec(flavor="other")
    s = GevreyClassSpec(2.0, 1.5, 1.0, BEURLING, WeightModel.per_axis([0.1, 0, 0], [1, 1, 1], [0, 0, 0]))
    assert GevreyClassSpec.from_json(s.to_json()) == s
    assert s.decay_powers == (0.5, 1 / 1.5, 1.0)
    assert s.admissibility(s1=1.2, sigma2=2.0, sigma3=3.0) == {"s2,s3 <= s1": False, "sigma1 <= sigma2,sigma3": True}


def test_gamma_constant_and_scale():
    one = gamma_norm_estimate(SampledField(G16, np.ones(G16.shape, complex)), GevreyClassSpec())
    assert one.h_fit == 0 and one.passed
    a = sym(gauss)
    r1 = gamma_norm_estimate(a, GevreyClassSpec(), K=4)
    r2 = gamma_norm_estimate(a.with_values(3.0 * a.values), GevreyClassSpec(), K=4)
    assert r2.h_fit == pytest.approx(r1.h_fit, rel=1e-12)
    assert r2.prefactor == pytest.approx(3 * r1.prefactor)
    # first-order term: the sampled sup of |x e^{-x^2/2}|
    x = G16.coords(0)
    assert r1.table["1,0,0"] == pytest.approx(np.max(np.abs(x * np.exp(-(x**2) / 2))), rel=1e-3)


def test_gamma_dilation_increases_h():
    G = self_dual_grid(32, 3)
    wide = gamma_norm_estimate(sym(gauss, G), GevreyClassSpec())
    narrow = gamma_norm_estimate(sym(lambda x, xi, eta: gauss(2 * x, 2 * xi, 2 * eta), G), GevreyClassSpec())
    assert narrow.h_fit > 1.5 * wide.h_fit


def test_gamma_errors():
    a = sym(gauss)
    with pytest.raises(ValueError):
        gamma_norm_estimate(a, GevreyClassSpec(), K=9)
    with pytest.raises(GridError):
        gamma_norm_estimate(SampledField(GridSpec.uniform(4.0, 16), np.ones(16)), GevreyClassSpec())
    with pytest.raises(ValueError):
        gamma_norm_estimate(SampledField(G16, np.zeros(G16.shape)), GevreyClassSpec())


def test_battery_derivative_verdicts_at_small_grid():
    G = self_dual_grid(16, 3)
    th = ClassThresholds()
    for case in class_battery(G):
        rep = gamma_norm_estimate(case.symbol, GevreyClassSpec(), K=4, h_max=th.h_max(G))
        assert rep.passed == case.in_class, case.name


def test_sampling_plan_deterministic(plan16):
    again = make_sampling_plan(G16, batch=256, seed=0)
    other = make_sampling_plan(G16, batch=256, seed=1)
    assert np.array_equal(plan16.batch_x, again.batch_x) and np.array_equal(plan16.z_full, again.z_full)
    assert not np.array_equal(plan16.batch_x, other.batch_x)
    dz = G16.axes[0].dual_spacing
    for z in (plan16.z_full, plan16.batch_z):
        assert np.allclose(z / dz, np.round(z / dz), atol=1e-9)
    assert plan16.to_json() == {"z_full": len(plan16.z_full), "batch": 256}


def test_separable_factors():
    w = gaussian_window(G16)
    f0, f1, f2 = separable_factors(w)
    assert np.allclose(f0[:, None, None] * f1[None, :, None] * f2[None, None, :], w.values, atol=1e-15)
    X, Y, Z = G16.mesh()
    assert separable_factors(w.with_values(w.values * (1 + 0.3 * X * Y))) is None


def test_batch_stft_fast_path_matches_brute_force(plan16):
    a = sym(lambda x, xi, eta: gauss(x, xi, eta) * (1 + 0.5j * xi))
    w = gaussian_window(G16)
    bx, bz = plan16.batch_x[:6], plan16.batch_z[:6]
    fast = _batch_stft(a, w, bx, bz)
    mesh = G16.mesh()
    half = np.array(G16.shape) // 2
    scale = G16.cell_volume * (2 * np.pi) ** -1.5
    for n in range(6):
        win = np.roll(w.values, tuple(int(v) for v in bx[n] - half), (0, 1, 2))
        wave = np.exp(-1j * sum(m * z for m, z in zip(mesh, bz[n])))
        assert fast[n] == pytest.approx(np.sum(a.values * np.conj(win) * wave) * scale, abs=1e-14)


def test_stft_decay_and_modspace(plan16):
    G = G16
    w = gaussian_window(G)
    spec = GevreyClassSpec()
    th = ClassThresholds()
    a = sym(gauss)
    vals = evaluate_plan(a, w, plan16, spec.weight)
    st = stft_class_check(a, w, spec, values=vals, r_min=th.r_min)
    assert st.passed and st.common_rate > th.r_min
    m_inf = modspace_class_check(a, w, spec, math.inf, 0.3, values=vals)
    assert m_inf >= sup_form(vals, spec.decay_powers, 0.0)
    assert modspace_verdict(a, w, spec, math.inf, th.mod_rate, vals, th.guard_phi(G)).passed
    with pytest.raises(OverflowError):
        modspace_class_check(a, w, spec, 1.0, 500.0, values=vals)


def test_partial_symbol_eta_free():
    fgrid = G16.sub((0,))
    x = fgrid.coords(0)
    g = SampledField(fgrid, np.exp(-(x**2) / 2 + 0.5j * x))
    a = sym(lambda x, xi, eta: np.exp(-(x**2) / 4 - xi**2 / 4) + 0 * eta)
    ag = partial_symbol(a, g)
    expect = a.values[:, :, 0] * g.values[:, None]
    assert np.max(np.abs(ag.values - expect)) <= 1e-12
    with pytest.raises(GridError):
        partial_symbol(a, SampledField(GridSpec.uniform(3.0, 16), g.values))
