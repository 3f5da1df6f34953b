import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msinject.analysis import (
    DegenerateWeightsError,
    convert_axis,
    distill_15to1,
    fit_linear,
    fit_quadratic,
    log_slope,
    rates,
)
from msinject.noise import NoiseModel
from msinject.sim import NoAcceptedTrialsError, Tally


def make_tally(shots, accepted, i, xl, zl, yl):
    return Tally(shots, accepted, {"I": i, "XL": xl, "ZL": zl, "YL": yl})


def test_rates_all_clean():
    r = rates(make_tally(1000, 1000, 1000, 0, 0, 0))
    assert r["success"].value == 1.0
    assert r["eps_total"].value == 0.0


def test_rates_binomial_arithmetic():
    t = make_tally(20000, 10000, 9990, 0, 10, 0)
    r = rates(t)
    assert r["success"].value == 0.5
    assert math.isclose(r["eps_zl"].value, 1e-3)
    assert math.isclose(r["eps_zl"].sem, math.sqrt(1e-3 * (1 - 1e-3) / 10000))
    assert math.isclose(r["eps_total"].value, 1e-3)
    assert r["eps_xl"].value == 0.0


def test_rates_y_counts_in_both_components():
    r = rates(make_tally(100, 100, 90, 4, 3, 3))
    assert math.isclose(r["eps_xl"].value, 0.07)
    assert math.isclose(r["eps_zl"].value, 0.06)
    assert math.isclose(r["eps_total"].value, 0.10)
    assert r["eps_total"].value <= r["eps_xl"].value + r["eps_zl"].value
    assert r["eps_total"].value >= max(r["eps_xl"].value, r["eps_zl"].value)


def test_rates_no_accepted():
    with pytest.raises(NoAcceptedTrialsError):
        rates(make_tally(100, 0, 0, 0, 0, 0))


def test_quadratic_exact_recovery():
    pts = [(p, 4480 * p * p, 1e-6) for p in (1e-4, 2e-4, 3e-4)]
    fit = fit_quadratic(pts)
    assert math.isclose(fit.coefficient, 4480, rel_tol=1e-9)
    assert fit.exponent == 2
    expected_err = math.sqrt(1 / sum((p ** 2 / 1e-6) ** 2 for p, _, _ in pts))
    assert math.isclose(fit.stderr, expected_err, rel_tol=1e-9)


def test_linear_exact_recovery():
    pts = [(p, 11.6 * p, 1e-6) for p in (1e-4, 2e-4, 4e-4)]
    fit = fit_linear(pts)
    assert math.isclose(fit.coefficient, 11.6, rel_tol=1e-9)
    assert fit.exponent == 1


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateWeightsError):
        fit_quadratic([(1e-4, 1e-6, 0.0)])
    with pytest.raises(DegenerateWeightsError):
        fit_quadratic([(1e-4, 1e-6, 1e-7)])


def test_quadratic_recovery_with_noise():
    # synthetic A p^2 with homoscedastic noise: recover within 3 stderr
    rng = np.random.default_rng(7)
    hit = 0
    for _ in range(200):
        pts = []
        for p in np.linspace(1e-4, 5e-4, 6):
            sem = 2e-5
            pts.append((p, 4480 * p * p + rng.normal(0, sem), sem))
        fit = fit_quadratic(pts)
        if abs(fit.coefficient - 4480) < 3 * fit.stderr:
            hit += 1
    assert hit >= 0.99 * 200 * 0.9   # >= 99% nominal with slack


def test_convert_axis_paper_values():
    a = NoiseModel("A", 1e-4, 1e4)
    b = NoiseModel("B", 1e-4, 1e4)
    assert math.isclose(convert_axis(4480, 2, a), 11.2)
    assert math.isclose(convert_axis(11.6, 1, a), 0.58)
    assert math.isclose(convert_axis(178, 2, b), 44.5)
    # round trip
    c = convert_axis(4480, 2, a)
    assert math.isclose(c * 20 ** 2, 4480)


def test_distill_examples():
    assert math.isclose(distill_15to1(0.0011), 35 * 0.0011 ** 3)
    assert 4.5e-8 <= distill_15to1(0.0011) <= 4.8e-8
    assert 1e-6 <= distill_15to1(0.0033) < 1.3e-6
    assert distill_15to1(0.0) == 0.0
    assert distill_15to1(1.0) == 1.0
    with pytest.raises(ValueError):
        distill_15to1(1.5)


@given(st.floats(min_value=0, max_value=1))
def test_distill_bounded_and_contractive(eps):
    out = distill_15to1(eps)
    assert 0 <= out <= 1
    if eps <= math.sqrt(1 / 35):
        assert out <= eps + 1e-15


@given(
    st.lists(
        st.floats(min_value=1e-5, max_value=0.5), min_size=2, max_size=2,
        unique=True,
    )
)
@settings(max_examples=50)
def test_distill_monotone(pair):
    a, b = sorted(pair)
    assert distill_15to1(a) <= distill_15to1(b)


def test_log_slope_recovers_exponent():
    pts = [(p, 300 * p ** 3, 300 * p ** 3 * 0.05) for p in (3e-4, 6e-4, 1e-3)]
    slope, err = log_slope(pts)
    assert abs(slope - 3.0) < 1e-6
