import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bipdo.batteries import gaussian_window
from bipdo.lattice import GridError, GridSpec, SampledField, translate
from bipdo.timefreq import (
    DegenerateInputError,
    MixedExponents,
    WindowMismatchWarning,
    fit_decay_points,
    fit_gs_decay,
    mixed_norm,
    modulation_norm,
    modulation_norms,
    stft,
    stft_adjoint_invert,
    stft_at,
    stft_with_window_ratio,
)
from bipdo.weights import WeightModel

G = GridSpec.uniform(12.0, 256)


def gauss(grid=G, c=0.0, w=1.0, m=0.0):
    return SampledField.from_function(grid, lambda x: np.exp(-((x - c) ** 2) / (2 * w**2) + 1j * m * x))


@pytest.fixture(scope="module")
def gauss_stft():
    g = gauss()
    return stft(g, g)


def test_origin_value(gauss_stft):
    g = gauss()
    V = gauss_stft.values
    assert V[128, 128] == pytest.approx(g.norm() ** 2 / math.sqrt(2 * math.pi), rel=1e-14)


def test_gaussian_closed_form(gauss_stft):
    X, XI = gauss_stft.grid.mesh()
    exact = math.sqrt(math.pi) / math.sqrt(2 * math.pi) * np.exp(-(X**2 + XI**2) / 4)
    assert np.max(np.abs(np.abs(gauss_stft.values) - exact)) <= 1e-9


def test_modulus_covariance():
    f = gauss(c=0.4, w=1.5, m=0.7)
    phi = gauss()
    dx = G.axes[0].spacing
    V = stft(f, phi).values
    Vt = stft(translate(f, [5 * dx]), phi).values
    assert np.max(np.abs(np.abs(Vt) - np.abs(np.roll(V, 5, axis=0)))) <= 1e-10


def test_inversion_and_zero():
    phi = gauss()
    f = gauss(c=1.0, w=0.8, m=-2.0)
    back = stft_adjoint_invert(stft(f, phi), phi)
    assert np.linalg.norm(back.values - f.values) <= 1e-10 * np.linalg.norm(f.values)
    z = SampledField(G, np.zeros(256))
    assert np.all(stft_adjoint_invert(stft(z, phi), phi).values == 0)


def test_random_bandlimited_roundtrip(rng):
    k = rng.integers(-60, 60, size=6)
    x = G.coords(0)
    f = SampledField(G, sum(np.exp(1j * kk * G.axes[0].dual_spacing * x) * rng.normal() for kk in k))
    phi = gauss()
    back = stft_adjoint_invert(stft(f, phi), phi)
    assert np.linalg.norm(back.values - f.values) <= 1e-8 * np.linalg.norm(f.values)


def test_window_mismatch():
    f, phi, psi = gauss(c=0.5), gauss(), gauss(w=2.0)
    V = stft(f, phi)
    with pytest.warns(WindowMismatchWarning):
        stft_adjoint_invert(V, psi)
    rec = stft_with_window_ratio(V, psi, phi)
    assert np.linalg.norm(rec.values - f.values) <= 1e-9 * np.linalg.norm(f.values)


def test_stft_errors():
    with pytest.raises(ValueError):
        stft(gauss(), SampledField(G, np.zeros(256)))
    with pytest.raises(GridError):
        stft(gauss(), gauss(GridSpec.uniform(12.0, 128)))


@given(st.integers(0, 2**31 - 1))
def test_moyal_random(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec.uniform(8.0, 64)
    f = SampledField(g, rng.normal(size=64) + 1j * rng.normal(size=64))
    phi = gaussian_window(g, float(rng.uniform(0.5, 2)))
    assert mixed_norm(stft(f, phi)) == pytest.approx(f.norm() * phi.norm(), rel=1e-10)


def test_mixed_norm_properties(gauss_stft):
    inf = MixedExponents(math.inf, math.inf)
    assert mixed_norm(gauss_stft, None, inf) == pytest.approx(np.max(np.abs(gauss_stft.values)), rel=1e-15)
    c = 2.5 - 1j
    F2 = gauss_stft.with_values(gauss_stft.values * c)
    for pq in (MixedExponents(1, 2), MixedExponents(2, math.inf), inf):
        assert mixed_norm(F2, None, pq) == pytest.approx(abs(c) * mixed_norm(gauss_stft, None, pq), rel=1e-13)
    small = WeightModel.single(2, poly_degree=1.0)
    big = WeightModel.single(2, poly_degree=2.0)
    assert mixed_norm(gauss_stft, small, MixedExponents(1, 1)) <= mixed_norm(gauss_stft, big, MixedExponents(1, 1))
    with pytest.raises(GridError):
        mixed_norm(gauss_stft, WeightModel.unit(3))


def test_exponents_parse():
    assert MixedExponents.parse("inf", 2).p == math.inf
    assert MixedExponents.parse(3).q == 3
    with pytest.raises(ValueError):
        MixedExponents(0.5, 2)


def test_modulation_norms_match_scalar(rng):
    phi = gauss()
    fs = np.array([gauss(c=c, w=w, m=m).values for c, w, m in rng.uniform(-2, 2, size=(4, 3)) + [0, 2.5, 0]])
    w = WeightModel.per_axis([0.1, -0.2], [1, 0.5], [1, 0])
    for pq in (MixedExponents(2, 2), MixedExponents(1, math.inf)):
        batch = modulation_norms(fs, phi, w, pq)
        single = [modulation_norm(SampledField(G, v), phi, w, pq) for v in fs]
        assert batch == pytest.approx(single, rel=1e-13)


def test_two_window_equivalence():
    f = gauss(c=1.0, w=1.3, m=1.0)
    n1 = modulation_norm(f, gaussian_window(G, 1.0), None, MixedExponents(1, 1))
    n2 = modulation_norm(f, gaussian_window(G, 2.0), None, MixedExponents(1, 1))
    C = max(n1 / n2, n2 / n1)
    assert 1 <= C < 10


def test_spike_sup_location():
    f = SampledField(G, np.zeros(256))
    f.values[150] = 1.0
    V = stft(f, gauss())
    j, _ = np.unravel_index(np.argmax(np.abs(V.values)), V.values.shape)
    assert abs(V.grid.coords(0)[j] - G.coords(0)[150]) <= G.axes[0].spacing


def test_stft_at_lattice_matches_dense(rng):
    g = GridSpec.uniform(8.0, 64)
    f = SampledField(g, rng.normal(size=64) + 0j)
    phi = gaussian_window(g)
    V = stft(f, phi)
    xi = V.grid.coords(1)
    out = stft_at(f, phi, xi[[3, 40]][:, None])
    assert np.max(np.abs(out[0] - V.values[:, 3])) <= 1e-13
    assert np.max(np.abs(out[1] - V.values[:, 40])) <= 1e-13


def test_gs_fit_gaussian(gauss_stft):
    rep = fit_gs_decay(gauss_stft, [2, 2])
    assert rep.common_rate == pytest.approx(0.25, abs=1e-2)
    assert rep.passed
    assert fit_gs_decay(gauss_stft, [1, 1]).passed


def test_gs_fit_flat_ridge():
    g = GridSpec.uniform(8.0, 64, 2)
    X, XI = g.mesh()
    V = SampledField(g, np.broadcast_to(np.exp(-(XI**2)), g.shape))
    rep = fit_gs_decay(V, [1, 1])
    assert not rep.passed and rep.rates[0] == 0


def test_gs_fit_scale_equivariant_and_nested(gauss_stft):
    a = fit_gs_decay(gauss_stft, [1, 1])
    b = fit_gs_decay(gauss_stft.with_values(gauss_stft.values * 1e-3), [1, 1])
    assert b.log_prefactor == pytest.approx(a.log_prefactor + math.log(1e-3), abs=1e-12)
    assert b.rates == pytest.approx(a.rates, rel=1e-12)
    for p_small, p_big in [(0.5, 1.0), (1.0, 2.0)]:
        larger_s = fit_gs_decay(gauss_stft, [p_small, p_small]).common_rate
        smaller_s = fit_gs_decay(gauss_stft, [p_big, p_big]).common_rate
        assert larger_s >= smaller_s


def test_gs_fit_peak_center_is_translation_invariant():
    phi = gauss()
    # shift by whole lattice steps so the peak stays on a node
    c, m = 32 * G.axes[0].spacing, 8 * G.axes[0].dual_spacing
    centred = fit_gs_decay(stft(gauss(), phi), [1, 1], center="peak").common_rate
    moved = fit_gs_decay(stft(gauss(c=c, m=m), phi), [1, 1], center="peak").common_rate
    origin = fit_gs_decay(stft(gauss(c=c, m=m), phi), [1, 1]).common_rate
    assert moved == pytest.approx(centred, rel=0.05)
    assert origin < 0.5 * centred


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        fit_decay_points(np.zeros((3, 2)), np.full(3, -np.inf), [1, 1])
    with pytest.raises(ValueError):
        fit_decay_points(np.zeros((3, 2)), np.zeros(3), [1, 1], floor=1e-20)
    with pytest.raises(DegenerateInputError):
        fit_decay_points(np.ones((3, 2)), np.zeros(3), [1, 1], noise_log=5.0)
