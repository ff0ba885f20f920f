import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bipdo.lattice import GridSpec
from bipdo.weights import (
    BoundaryContaminationError,
    WeightGroup,
    WeightModel,
    WeightOverflowError,
    check_moderate,
    evaluate,
    fit_derivative_bound,
    ratio_bound,
    smooth_weight,
    smoothed_derivative,
)

peetre = WeightModel.single(1, poly_degree=1.0)
exp1 = WeightModel.single(1, exp_rate=1.0)


def test_evaluate_basics():
    assert np.all(evaluate(WeightModel.unit(1), GridSpec.uniform(3.0, 8)).values == 1)
    # the grid {-1, 0} sampled from e^{|x|}
    vals = evaluate(exp1, GridSpec.uniform(1.0, 2)).values.real
    assert vals == pytest.approx([math.e, 1.0])


@given(st.floats(-2, 2), st.floats(0.2, 2), st.floats(-3, 3))
def test_product_is_pointwise(rate, power, degree):
    g = GridSpec.uniform(5.0, 16, 2)
    a = WeightModel.single(2, exp_rate=rate, inv_exp_power=power)
    b = WeightModel.per_axis([0.0, 0.3], [1.0, 1.0], [degree, 0.0])
    prod = evaluate(a * b, g).values
    assert np.max(np.abs(prod / (evaluate(a, g).values * evaluate(b, g).values) - 1)) <= 1e-14
    q = evaluate(a / a, g).values
    assert np.max(np.abs(q - 1)) <= 1e-14


def test_json_roundtrip_and_validation():
    w = WeightModel((WeightGroup((0, 1), 0.5, 0.5, 2.0), WeightGroup((1,), 0, 1, -1)), 2)
    assert WeightModel.from_json(w.to_json()) == w
    with pytest.raises(ValueError):
        WeightGroup((0,), 1.0, 0.0)
    with pytest.raises(ValueError):
        WeightModel((WeightGroup((3,)),), 2)
    with pytest.raises(ValueError):
        peetre * WeightModel.unit(2)


def test_overflow_guard():
    with pytest.raises(WeightOverflowError):
        WeightModel.single(1, exp_rate=100.0)(np.array([20.0]))


def test_moderation_examples():
    p = check_moderate(peetre, peetre)
    assert p.passed and p.constant <= math.sqrt(2) * 1.001
    e = check_moderate(exp1, exp1)
    assert e.passed and e.constant <= 1 + 1e-12
    bad = check_moderate(WeightModel.single(1, exp_rate=1.0, inv_exp_power=2.0), exp1)
    assert not bad.passed and bad.growth_detected


def test_moderation_monotone_in_v():
    w = WeightModel.single(1, exp_rate=0.5, inv_exp_power=0.5)
    small = check_moderate(w, WeightModel.single(1, exp_rate=0.5, inv_exp_power=0.5))
    big = check_moderate(w, WeightModel.single(1, exp_rate=0.8, inv_exp_power=0.5))
    assert small.passed and big.passed
    assert big.constant <= small.constant


def test_smoothing_constant_and_exp():
    g = GridSpec.uniform(12.0, 256)
    c = smooth_weight(WeightModel.unit(1), [0.5], g)
    assert np.max(np.abs(c.values - 1)) <= 1e-10
    w0 = smooth_weight(exp1, [0.5], g, region=6.0)
    assert np.all(w0.values.real > 0)
    C = ratio_bound(w0, exp1, 6.0)
    # a unit-mass Gaussian of width 1 moves e^{|x|} by at most e^{E|y|} = e^{1/sqrt(pi)} in the interior
    assert 1 < C <= math.exp(1 / math.sqrt(math.pi)) * 1.5


def test_smoothing_guards():
    g = GridSpec.uniform(4.0, 64)
    with pytest.raises(BoundaryContaminationError):
        smooth_weight(exp1, [0.5], g, region=3.0)
    with pytest.raises(ValueError):
        smooth_weight(exp1, [1.5], GridSpec.uniform(12.0, 64))


def test_smoothed_derivative_matches_differences():
    # w0 is not periodic on the box, so the oracle is a 4th-order central difference in the interior.
    # FFT roundoff scales with max w on the doubled box (e^24), about 1e-6 relative near x = 0.
    g = GridSpec.uniform(12.0, 512)
    h = g.axes[0].spacing
    w0 = smooth_weight(exp1, [0.5], g, region=6.0).values.real
    d = smoothed_derivative(exp1, g, [1]).values.real
    fd = (-np.roll(w0, -2) + 8 * np.roll(w0, -1) - 8 * np.roll(w0, 1) + np.roll(w0, 2)) / (12 * h)
    mask = np.abs(g.coords(0)) <= 6
    assert np.max(np.abs(d - fd)[mask] / w0[mask]) <= 1e-4


def test_derivative_bound_holds_with_fitted_h():
    g = GridSpec.uniform(12.0, 256)
    rep = fit_derivative_bound(exp1, [0.5], g, max_order=2, region=6.0)
    assert rep.passed and 0 < rep.h_fit < 5
    w0 = smooth_weight(exp1, [0.5], g, region=6.0).values.real
    mask = np.abs(g.coords(0)) <= 6
    for k in (1, 2):
        d = np.abs(smoothed_derivative(exp1, g, [k]).values.real)
        bound = rep.h_fit**k * math.factorial(k) ** 0.5 * w0
        assert np.all(d[mask] <= bound[mask] * (1 + 1e-9))
