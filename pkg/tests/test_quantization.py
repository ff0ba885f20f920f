import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bipdo.batteries import gaussian_atoms, gaussian_window, pair_battery, self_dual_grid
from bipdo.lattice import GridError, GridSpec, SampledField
from bipdo.quantization import (
    ClosedFormSymbol,
    GateRejection,
    InadmissiblePairError,
    QuantizationPair,
    apply_bilinear,
    apply_linear,
    boundedness_probe,
    convert_linear_symbol,
    convert_symbol,
    gs_continuity_check,
    linear_symbol_grid,
    make_covariance_plan,
    omega_R,
    relative_l2,
    stft_covariance_check,
    symbol_grid,
    verify_invariance,
)
from bipdo.symbols import GevreyClassSpec
from bipdo.timefreq import MixedExponents
from bipdo.weights import WeightModel

F16 = GridSpec.uniform(6.0, 16)
F24 = GridSpec.uniform(8.0, 24)


def gsym(x, xi, eta):
    return np.exp(-(x**2) / 2 - (xi**2 + eta**2) / 4) * (1 + 0.3j * xi - 0.2 * eta)


SYM = ClosedFormSymbol(gsym, "gauss_poly")


def fg(grid):
    x = grid.coords(0)
    return (SampledField(grid, np.exp(-((x - 0.3) ** 2) / 1.2)),
            SampledField(grid, np.exp(-((x + 0.2) ** 2) / 1.5 + 0.6j * x)))


@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_admissibility(r, t):
    tol = 1e-12
    ok = -tol <= r <= 1 + tol and -tol <= t <= 1 + tol and r + t <= 1 + tol
    if ok:
        QuantizationPair(r, t)
    else:
        with pytest.raises(InadmissiblePairError):
            QuantizationPair(r, t)


def test_pair_parse():
    assert QuantizationPair.parse([0.5, 0.25]) == QuantizationPair(0.5, 0.25)
    assert QuantizationPair.parse({"r": 1, "t": 0}).to_json() == [1.0, 0.0]


@pytest.fixture(scope="module")
def sampled():
    return SYM.sample(symbol_grid(F16))


PAIRS = st.tuples(st.sampled_from([0, 0.25, 1 / 3, 0.5]), st.sampled_from([0, 0.25, 1 / 3, 0.5]))


@given(PAIRS, PAIRS, PAIRS)
def test_convert_groupoid(sampled, p1, p2, p3):
    direct = convert_symbol(sampled, p1, p3).values
    via = convert_symbol(convert_symbol(sampled, p1, p2), p2, p3).values
    assert np.max(np.abs(direct - via)) <= 1e-12 * np.max(np.abs(direct))


def test_convert_identity_copies(sampled):
    b = convert_symbol(sampled, (0.5, 0.5), (0.5, 0.5))
    assert np.array_equal(b.values, sampled.values) and b.values is not sampled.values


def test_convert_shape_errors():
    with pytest.raises(GridError):
        convert_symbol(SampledField(F16, np.ones(16)), (0, 0), (1, 0))
    with pytest.raises(InadmissiblePairError):
        convert_symbol(SYM.sample(symbol_grid(F16)), (0.7, 0.7), (0, 0))


def test_unit_symbol_is_pointwise_product():
    f, g = fg(F16)
    one = SampledField(symbol_grid(F16), np.ones(symbol_grid(F16).shape, complex))
    for pair in [(0, 0), (0.5, 0.5), (1, 0)]:
        out = apply_bilinear(one, pair, f, g).values
        assert np.max(np.abs(out - f.values * g.values)) <= 1e-12


@pytest.mark.parametrize("pair", [(0, 0), (0.5, 0.5), (1 / 3, 1 / 3), (0.25, 0.5)])
def test_pathways_agree(pair):
    f, g = fg(F16)
    kn = apply_bilinear(SYM, pair, f, g, "kn").values
    kern = apply_bilinear(SYM, pair, f, g, "kernel").values
    direct = apply_bilinear(SYM, pair, f, g, "direct").values
    # same sums up to how offsets wrap around the period; the gap is tail-sized
    assert relative_l2(kern, direct) <= 1e-6
    # kn samples the symbol on the lattice, the others evaluate it off-lattice
    assert relative_l2(kn, direct) <= 1e-4


def test_kn_kernel_agree_on_sampled_symbol(sampled):
    f, g = fg(F16)
    for pair in [(0.5, 0.5), (0.5, 0)]:
        kn = apply_bilinear(sampled, pair, f, g, "kn").values
        kern = apply_bilinear(sampled, pair, f, g, "kernel").values
        assert relative_l2(kn, kern) <= 1e-12


def test_direct_refuses_large_grid():
    f, g = fg(GridSpec.uniform(8.0, 64))
    with pytest.raises(GridError):
        apply_bilinear(SYM, (0, 0), f, g, "direct")


def test_bilinearity(sampled, rng):
    f, g = fg(F16)
    h = SampledField(F16, rng.normal(size=16) + 0j)
    c = 1.5 - 0.5j
    lhs = apply_bilinear(sampled, (0.5, 0.5), f.with_values(f.values + c * h.values), g).values
    rhs = (apply_bilinear(sampled, (0.5, 0.5), f, g).values
           + c * apply_bilinear(sampled, (0.5, 0.5), h, g).values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_invariance_report():
    battery = pair_battery(F24, 2, seed=1)
    reps = verify_invariance(SYM, [((0, 0), (0.5, 0.5)), ((1 / 3, 1 / 3), (1, 0))], battery,
                             reference="kernel")
    for r in reps:
        assert r.rel_error < 1e-4
        assert set(r.to_json()) >= {"pair_from", "pair_to", "rel_error", "test_battery_id", "pass"}
    with pytest.raises(ValueError):
        verify_invariance(SYM, [((0, 0), (1, 0))], [])


def test_linear_pathways_and_conversion():
    x = F24.coords(0)
    f = SampledField(F24, np.exp(-(x**2) / 2 + 0.4j * x))
    lin = ClosedFormSymbol(lambda x, xi, eta: np.exp(-(x**2) / 4 - xi**2 / 4) * (1 + 0.5j * xi), "lin")
    for t in (0.0, 0.5, 1.0):
        fft = apply_linear(lin, t, f, "fft").values
        direct = apply_linear(lin, t, f, "direct").values
        assert relative_l2(fft, direct) <= 1e-4
    a = SampledField.from_function(linear_symbol_grid(F24), lambda x, xi: np.exp(-(x**2) / 4 - xi**2 / 4),
                                   ("space", "frequency"))
    b = convert_linear_symbol(a, 0.5, 0.0)
    assert relative_l2(apply_linear(b, 0.0, f).values, apply_linear(a, 0.5, f).values) <= 1e-12
    one = SampledField(linear_symbol_grid(F24), np.ones((24, 24), complex))
    assert np.max(np.abs(apply_linear(one, 0.3, f).values - f.values)) <= 1e-12
    with pytest.raises(InadmissiblePairError):
        apply_linear(one, 1.5, f)


def test_covariance_exact_on_small_grid():
    # N=32 keeps the window periodic to double precision
    grid = self_dual_grid(32, 3)
    a = SampledField.from_function(grid, gsym, ("space", "frequency", "frequency"))
    plan = make_covariance_plan(grid, 30, seed=3)
    window = gaussian_window(grid)
    for pair in [(0, 0), (0.5, 0.5), (1 / 3, 1 / 3)]:
        assert stft_covariance_check(a, window, pair, plan) <= 1e-12 * np.max(np.abs(a.values))


def test_omega_R():
    w = omega_R(2.0, (1, 2))
    assert w.log_value([np.array([1.0]), np.array([2.0])])[0] == pytest.approx(-2.0 * (1 + 4))
    assert w.inverse().log_value([np.array([1.0]), np.array([2.0])])[0] == pytest.approx(10.0)


def test_boundedness_probe_small():
    fgrid = GridSpec.uniform(8.0, 32)
    a = SampledField.from_function(symbol_grid(fgrid), gsym, ("space", "frequency", "frequency"))
    unit = WeightModel.unit(2)
    pq = MixedExponents(2, 2)
    r4 = boundedness_probe(a, (0.5, 0.5), GevreyClassSpec(), unit, unit, pq, R=0.1, battery_size=4, seed=2)
    r6 = boundedness_probe(a, (0.5, 0.5), GevreyClassSpec(), unit, unit, pq, R=0.1, battery_size=6, seed=2)
    assert len(r4.ratios) == 16 and np.all(np.isfinite(r4.ratios))
    # nested batteries: the maximum can only grow
    assert r6.max_ratio >= r4.max_ratio
    assert r4.to_json()["pair"] == [0.5, 0.5]
    with pytest.raises(GridError):
        boundedness_probe(SYM, (0, 0), None, unit, unit, pq, 0.1, 2)


def test_gs_continuity_gate_and_fit():
    grid = GridSpec.uniform(12.0, 128)
    atoms = gaussian_atoms(grid, 4, seed=0, widths=(0.8, 1.5))
    battery = [(atoms[0].sample(grid), atoms[1].sample(grid)), (atoms[2].sample(grid), atoms[3].sample(grid))]
    a = ClosedFormSymbol(lambda x, xi, eta: np.exp(-(x**2) / 4 - (xi**2 + eta**2) / 8), "g")
    reps = gs_continuity_check(a, (0.5, 0.5), 1.0, 1.0, battery, r_min=0.1)
    assert all(r.passed for r in reps)
    x = grid.coords(0)
    slow = SampledField(grid, (1 + x**2) ** -0.125 + 0j)
    with pytest.raises(GateRejection, match="member 0"):
        gs_continuity_check(a, (0, 0), 1.0, 1.0, [(slow, battery[0][1])], r_min=0.1)
