import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refprice.choicemodel import (MixtureParameters, SegmentParameters, brand_probabilities,
                                  category_value, incidence_probability, joint_probability,
                                  log_incidence_probability, mixture_probability,
                                  no_purchase_probability, segment_utilities, utility_branch,
                                  utility_heaviside)
from refprice.errors import InvalidInputError
from refprice.presets import reformulation_preset


def seg(pi=0.5, a0=0.0, a1=0.0, intercepts=(0.0,), bg=0.5, bl=0.5, bp=-1.0):
    return SegmentParameters(pi, a0, a1, intercepts, bg, bl, bp)


class TestParameters:
    def test_benchmark_intercept_is_zero(self):
        s = seg(intercepts=(1.5, -2.0, 0.3))
        assert s.n_brands == 4
        assert s.intercept(4) == 0.0
        assert s.intercept(2) == -2.0
        assert s.intercept_vector().tolist() == [1.5, -2.0, 0.3, 0.0]

    def test_rejects_pi_outside_unit_interval(self):
        with pytest.raises(InvalidInputError):
            seg(pi=1.5)

    def test_rejects_non_numeric(self):
        with pytest.raises(InvalidInputError):
            seg(a0=True)
        with pytest.raises(InvalidInputError):
            seg(bg=float("nan"))

    def test_mixture_share_validation(self):
        s = seg()
        assert MixtureParameters((s,)).psi == (1.0,)
        with pytest.raises(InvalidInputError):
            MixtureParameters((s, s), (0.6, 0.5))
        with pytest.raises(InvalidInputError):
            MixtureParameters((s, s), (1.0, 0.0))
        with pytest.raises(InvalidInputError):
            MixtureParameters((s, seg(intercepts=(0.0, 0.0))), (0.5, 0.5))


class TestUtility:
    def test_equal_prices_kill_deviation(self):
        s = seg(intercepts=(0.0,), bg=0.5, bl=0.5, bp=-1.0)
        assert utility_branch(s, [2.0, 2.0], 2, 1) == pytest.approx(-2.0)

    def test_gain_branch(self):
        s = SegmentParameters(0.4, 0.0, 0.0, (1.0,), 2.0, 5.0, 0.0)
        assert utility_branch(s, [3.0, 2.0], 2, 1) == pytest.approx(3.0)

    def test_loss_branch(self):
        s = SegmentParameters(0.4, 0.0, 0.0, (1.0,), 2.0, 5.0, 0.0)
        assert utility_branch(s, [2.0, 3.0], 2, 1) == pytest.approx(-4.0)

    def test_heaviside_matches_at_zero_deviation(self):
        s = SegmentParameters(0.4, 0.0, 0.0, (1.0,), 2.0, 5.0, -1.0)
        assert utility_heaviside(s, [2.0, 2.0], 2, 1) == utility_branch(s, [2.0, 2.0], 2, 1)

    def test_heaviside_gain_selects_beta_g(self):
        s = SegmentParameters(0.0, 0.0, 0.0, (0.0,), 2.0, 5.0, 0.0)
        assert utility_heaviside(s, [3.0, 2.0], 2, 1) == 2.0

    def test_heaviside_rejects_bad_eps(self):
        with pytest.raises(InvalidInputError):
            utility_heaviside(seg(), [1.0, 2.0], 2, 1, eps=0.0)

    def test_segment_utilities_match_closed_form(self):
        rng = np.random.default_rng(5)
        prices = rng.uniform(0.5, 2.0, size=(12, 3))
        s = SegmentParameters(0.35, 0.1, 0.4, (0.2, -0.5), 1.3, 2.7, -1.1)
        u = segment_utilities(s, prices)
        for t in range(1, 13):
            for j in range(1, 4):
                assert u[t - 1, j - 1] == pytest.approx(utility_branch(s, prices, t, j),
                                                        abs=1e-12)


class TestProbabilities:
    def test_symmetric_brands(self):
        np.testing.assert_allclose(brand_probabilities([0, 0, 0, 0]), [0.25] * 4)

    def test_odds_ratio(self):
        np.testing.assert_allclose(brand_probabilities([1.0, 1.0 + math.log(3)]), [0.25, 0.75])

    def test_no_overflow(self):
        np.testing.assert_allclose(brand_probabilities([1000.0, 1000.0]), [0.5, 0.5])

    def test_category_value(self):
        assert category_value([0.0, 0.0]) == pytest.approx(math.log(2))
        assert category_value([2.7]) == 2.7
        assert category_value([math.log(1), math.log(3)]) == pytest.approx(math.log(4))

    def test_incidence(self):
        assert incidence_probability(0.0, 0.0, 1.3) == 0.5
        assert incidence_probability(math.log(3), 0.0, 0.0) == pytest.approx(0.75)
        assert incidence_probability(-745.0, 0.0, 0.0) > 0.0
        assert log_incidence_probability(-745.0, 0.0, 0.0) == pytest.approx(-745.0)

    def test_symmetric_joint(self):
        s = SegmentParameters(0.5, 0.0, 0.0, (0.0, 0.0, 0.0), 0.0, 0.0, -1.0)
        prices = np.ones((2, 4))
        assert joint_probability(s, prices, 2, 1) == pytest.approx(0.125)

    def test_preset_fixture(self):
        # Values recomputed independently at 50 digits from the written-out formulas.
        s1 = reformulation_preset().segments[0]
        prices = np.array([[0.25, 0.26, 0.24, 0.23], [0.20, 0.27, 0.24, 0.25]])
        expected = {
            1: [0.022127037046191365, 0.52534608584470450, 0.45162096568457949,
                0.00090591142423839702],
            2: [0.030065920842271678, 0.50680754324524312, 0.46230291315065639,
                0.00082362276151510665],
        }
        none = {1: 2.8624486818584328e-13, 2: 3.1370426118736765e-13}
        for t in (1, 2):
            for j in range(1, 5):
                assert joint_probability(s1, prices, t, j) == pytest.approx(
                    expected[t][j - 1], rel=1e-12)
            assert no_purchase_probability(s1, prices, t) == pytest.approx(none[t], rel=1e-6)

    def test_mixture_single_segment(self):
        s = SegmentParameters(0.3, 0.2, 0.5, (0.4,), 1.0, 2.0, -1.0)
        prices = np.array([[1.0, 1.2], [0.9, 1.3]])
        mix = MixtureParameters((s,), (1.0,))
        assert mixture_probability(mix, prices, 2, 1) == joint_probability(s, prices, 2, 1)
        twin = MixtureParameters((s, s), (0.5, 0.5))
        assert mixture_probability(twin, prices, 2, 1) == pytest.approx(
            joint_probability(s, prices, 2, 1), rel=1e-15)

    def test_mixture_weighted_sum(self):
        a = SegmentParameters(0.3, 0.2, 0.5, (0.4,), 1.0, 2.0, -1.0)
        b = SegmentParameters(0.8, -0.5, 1.5, (-0.7,), 0.5, 3.0, -2.0)
        prices = np.array([[1.0, 1.2], [0.9, 1.3], [1.4, 0.8]])
        mix = MixtureParameters((a, b), (0.3, 0.7))
        for t in (1, 2, 3):
            for j in (1, 2):
                hand = 0.3 * joint_probability(a, prices, t, j) \
                    + 0.7 * joint_probability(b, prices, t, j)
                assert mixture_probability(mix, prices, t, j) == pytest.approx(hand, rel=1e-14)


coef = st.floats(-5.0, 5.0)


@st.composite
def segments_and_prices(draw, n_brands=3, n_periods=5):
    s = SegmentParameters(draw(st.floats(0.0, 1.0)), draw(coef), draw(st.floats(-2.0, 2.0)),
                          tuple(draw(coef) for _ in range(n_brands - 1)), draw(coef),
                          draw(coef), draw(coef))
    prices = np.array([[draw(st.floats(0.5, 3.0)) for _ in range(n_brands)]
                       for _ in range(n_periods)])
    return s, prices


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=8))
def test_brand_probabilities_sum_and_shift(u):
    p = brand_probabilities(u)
    assert abs(p.sum() - 1.0) <= 1e-12
    for shift in (-500.0, 500.0):
        np.testing.assert_allclose(brand_probabilities(np.array(u) + shift), p,
                                   rtol=1e-9, atol=1e-300)


@given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(-5, 5), st.floats(0.01, 1.0))
def test_incidence_increasing_in_category_value(a0, a1, cv, delta):
    lo = log_incidence_probability(a0, a1, cv)
    hi = log_incidence_probability(a0, a1, cv + delta)
    assert hi > lo


@settings(max_examples=100, deadline=None)
@given(segments_and_prices())
def test_law_of_total_probability(case):
    s, prices = case
    for t in range(1, prices.shape[0] + 1):
        total = sum(joint_probability(s, prices, t, j) for j in range(1, s.n_brands + 1))
        assert abs(total + no_purchase_probability(s, prices, t) - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(segments_and_prices(), segments_and_prices(), st.floats(0.05, 0.9),
       st.floats(0.01, 0.09))
def test_mixture_monotone_in_weights(c1, c2, w, step):
    (a, prices), (b, _) = c1, c2
    b = SegmentParameters(b.pi, b.alpha0, b.alpha1, b.brand_intercepts, b.beta_g, b.beta_l,
                          b.beta_p)
    pa = joint_probability(a, prices, 3, 1)
    pb = joint_probability(b, prices, 3, 1)
    hi_first = pa >= pb
    w2 = min(w + step, 0.99)
    lo = MixtureParameters((a, b), (w, 1 - w) if hi_first else (1 - w, w))
    up = MixtureParameters((a, b), (w2, 1 - w2) if hi_first else (1 - w2, w2))
    assert mixture_probability(up, prices, 3, 1) >= mixture_probability(lo, prices, 3, 1) - 1e-15


@settings(max_examples=200, deadline=None)
@given(segments_and_prices(n_brands=2, n_periods=4))
def test_heaviside_equals_branch_away_from_ties(case):
    s, prices = case
    from refprice.reference import reference_closed_form
    for t in range(1, 5):
        for j in (1, 2):
            r = reference_closed_form(prices[:, j - 1], s.pi, t)
            if abs(r - prices[t - 1, j - 1]) > 1e-5:
                assert utility_heaviside(s, prices, t, j) == utility_branch(s, prices, t, j)
