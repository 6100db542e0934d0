from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supercrit.exponents import (
    INF,
    AdmissiblePair,
    ModelParams,
    critical_regularity,
    exponent_table,
    is_admissible,
    margin_root,
    morawetz_exponent,
    p_window,
    scaling_gamma,
    smoothness_margin,
    xy_exponents,
)


@pytest.mark.parametrize("d,p,expected", [(3, 4, 1.0), (3, 6, 7 / 6), (5, 4 / 3, 1.0)])
def test_critical_regularity_values(d, p, expected):
    assert critical_regularity(d, p) == pytest.approx(expected, abs=1e-15)


def test_window_low_dimensions():
    assert p_window(3) == (4.0, INF)
    assert p_window(4) == (2.0, 4.0)
    lo, hi = p_window(6)
    assert (lo, hi) == (1.0, pytest.approx(4 / 3))


def test_window_d7_matches_closed_form():
    # (42 - sqrt(740)) / 16, evaluated with a 50-digit decimal square root
    from decimal import Decimal, getcontext

    getcontext().prec = 50
    oracle = float((Decimal(42) - Decimal(740).sqrt()) / 16)
    lo, hi = p_window(7)
    assert lo == pytest.approx(0.8, abs=1e-15)
    assert hi == pytest.approx(oracle, abs=1e-14)
    assert f"{hi:.4f}" == "0.9248"


@pytest.mark.parametrize("d", range(7, 13))
def test_upper_endpoint_is_quadratic_root(d):
    hi = p_window(d)[1]
    assert abs(hi**2 - d * (d - 1) / (d + 1) * hi + 4) < 1e-10
    assert abs(hi - margin_root(d)) < 1e-8
    assert abs(smoothness_margin(d, hi)) < 1e-10


def test_margin_signs_at_d7():
    assert smoothness_margin(7, 0.8) > 0
    assert smoothness_margin(7, 1.5) < 0


@pytest.mark.parametrize("q,r,d,ok", [(INF, 2, 5, True), (2, 4, 5, True), (2, 2, 3, False)])
def test_is_admissible_examples(q, r, d, ok):
    assert is_admissible(q, r, d) is ok


def test_scaling_gamma_examples():
    assert scaling_gamma(INF, 2, 3, 4) == pytest.approx(1.0)
    assert scaling_gamma(4, 4, 3, 6) == pytest.approx(2 / 3)
    assert scaling_gamma(INF, 2, 7, 0.9) == pytest.approx(3.5 - 2 / 0.9)
    assert scaling_gamma(INF, 2, 7, 0.9) == pytest.approx(1.2778, abs=1e-4)


def test_xy_exponents_d3_exact_rationals():
    xy = xy_exponents(3, 6)
    got = [xy.deriv_order, xy.time_exp_X, xy.space_exp_X, xy.time_exp_Y, xy.space_exp_Y]
    want = [Fraction(2, 3), 4, 4, Fraction(4, 3), Fraction(4, 3)]
    for g, w in zip(got, want):
        assert g == pytest.approx(float(w), abs=1e-14)


def test_xy_exponents_d7_denominator():
    d, p = 7, 0.9
    denom = 4 * (d + 1) + p**2 * (d + 1) - p * d * (d - 1)
    assert denom == pytest.approx(0.68, abs=1e-12)
    xy = xy_exponents(d, p)
    assert xy.time_exp_X == pytest.approx(2 * p * (d + 1) / denom)
    with pytest.raises(ValueError):
        xy_exponents(7, 0.93)


def test_model_params_flags():
    m = ModelParams(3, 6.0)
    assert m.s_c == pytest.approx(7 / 6)
    assert m.supercritical and m.theorem_window and not m.focusing
    assert not ModelParams(3, 3.0).supercritical
    assert ModelParams(3, 6.0, -1).focusing
    with pytest.raises(ValueError):
        ModelParams(2, 6.0)


def test_admissible_pair_carries_gamma():
    pair = AdmissiblePair.for_model(4, 4, ModelParams(3, 6.0))
    d, p = 3, 6.0
    assert 1 / pair.q + d / pair.r == pytest.approx(2 / p + pair.gamma)
    with pytest.raises(ValueError):
        AdmissiblePair.for_model(2, 2, ModelParams(3, 6.0))


def test_morawetz_exponent_is_one_third():
    assert morawetz_exponent(3, 6.0) == 1 / 3


def test_table_contents():
    t = exponent_table(7)
    assert t["p_window"][0] == pytest.approx(0.8)
    assert t["p_window"][1] == pytest.approx(0.924816, abs=1e-6)
    t = exponent_table(3, 6.0)
    assert t["s_c"] == pytest.approx(7 / 6) and t["in_window"]
    assert t["xy"]["deriv_order"] == pytest.approx(2 / 3)


dims = st.integers(min_value=3, max_value=12)


@given(d=dims, frac=st.floats(min_value=1e-3, max_value=1 - 1e-3))
@settings(max_examples=150, deadline=None)
def test_window_interior_properties(d, frac):
    lo, hi = p_window(d)
    p = lo + frac * (min(hi, lo + 20.0) - lo)
    if d <= 6:
        assert critical_regularity(d, p) < 1.5
    xy = xy_exponents(d, p)
    assert min(xy.deriv_order, xy.time_exp_X, xy.space_exp_X,
               xy.time_exp_Y, xy.space_exp_Y) > 0


@given(d=dims)
def test_energy_pair_admissible(d):
    assert is_admissible(INF, 2.0, d)


@given(d=dims, q=st.floats(2, 50), r=st.floats(2, 50),
       dq=st.floats(0, 20), dr=st.floats(0, 20))
@settings(max_examples=200)
def test_admissibility_monotone(d, q, r, dq, dr):
    if is_admissible(q, r, d):
        assert is_admissible(q + dq, r + dr, d)


@given(d=st.integers(3, 6), frac=st.floats(0.01, 0.99))
def test_x_pair_gamma_matches_derivative_order(d, frac):
    lo, hi = p_window(d)
    p = lo + frac * (min(hi, 12.0) - lo)
    q = 2 * (d + 1) / (d - 1)
    assert scaling_gamma(q, q, d, p) == pytest.approx(xy_exponents(d, p).deriv_order,
                                                      abs=1e-12)
