import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refprice.choicemodel import MixtureParameters, SegmentParameters
from refprice.datagen import SimulationSpec, simulate_panel
from refprice.errors import EstimationError
from refprice.estimator import (ClampWarning, FitOptions, Parameterization,
                                canonicalize_segments, fit, p_value, pack, parameter_names,
                                significance_flags, unpack)
from refprice.likelihood import Evaluation, mixture_loglik
from refprice.panel import ChoicePanel
from refprice.presets import ONE_SEGMENT_TRUTH, PRESET_PRICES, reformulation_preset


def duplicate(panel):
    hh = list(panel) * 2
    return ChoicePanel(range(len(hh)), [h.prices for h in hh], [h.choices for h in hh])


def seg(pi, bp=-1.0, k=3):
    return SegmentParameters(pi, 0.1, 0.5, (0.2,) * (k - 1), 1.0, 2.0, bp)


@st.composite
def mixtures(draw):
    s = draw(st.integers(1, 3))
    k = draw(st.integers(2, 4))
    c = st.floats(-5, 5)
    segs = tuple(SegmentParameters(draw(st.floats(0.01, 0.99)), draw(c), draw(c),
                                   tuple(draw(c) for _ in range(k - 1)), draw(c), draw(c),
                                   draw(c)) for _ in range(s))
    w = np.array([draw(st.floats(0.05, 1.0)) for _ in range(s)])
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return MixtureParameters(segs, tuple(w))


class TestParameterization:
    def test_logit_of_half_is_zero(self):
        x = pack(MixtureParameters((seg(0.5),)))
        assert x[0] == 0.0

    def test_equal_shares_give_zero_logit(self):
        x = pack(MixtureParameters((seg(0.2), seg(0.6)), (0.5, 0.5)))
        assert x[-1] == 0.0

    def test_layout(self):
        p = Parameterization(3, 4)
        assert p.size == 3 * 9 + 2
        assert Parameterization(3, 4, fixed_pi=0.5).size == p.size - 3

    def test_benchmark_intercept_not_a_parameter(self):
        names = parameter_names(1, 4)
        assert "beta_3[1]" in names and "beta_4[1]" not in names

    def test_clamps_boundary_pi(self):
        with pytest.warns(ClampWarning):
            x = pack(MixtureParameters((seg(0.0),)))
        assert np.isfinite(x).all()
        assert unpack(x, 1, 3).segments[0].pi == pytest.approx(1e-8)

    @settings(max_examples=100, deadline=None)
    @given(mixtures())
    def test_round_trip(self, mix):
        x = pack(mix)
        back = unpack(x, mix.n_segments, mix.n_brands)
        np.testing.assert_allclose(pack(back), x, rtol=0, atol=1e-12)
        for a, b in zip(mix.segments, back.segments):
            assert b.pi == pytest.approx(a.pi, abs=1e-12)
        np.testing.assert_allclose(back.psi, mix.psi, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 3), st.integers(2, 4), st.data())
    def test_unpack_always_valid(self, s, k, data):
        size = Parameterization(s, k).size
        x = np.array(data.draw(st.lists(st.floats(-40, 40), min_size=size, max_size=size)))
        mix = unpack(x, s, k)
        assert all(0.0 <= g.pi <= 1.0 for g in mix.segments)
        assert abs(sum(mix.psi) - 1.0) <= 1e-12


class TestSignificance:
    def test_examples(self):
        flags = significance_flags({"a": 0.0, "b": 10.0, "c": 1.0},
                                   {"a": 0.3, "b": 1.0, "c": 1.0})
        assert flags == {"a": False, "b": True, "c": False}

    def test_p_value(self):
        assert p_value(1.0, 1.0) == pytest.approx(math.erfc(1 / math.sqrt(2)), rel=1e-12)
        assert p_value(1.0, 1.0) == pytest.approx(0.3173, abs=1e-4)

    def test_missing_se_is_never_significant(self):
        assert significance_flags({"a": 5.0}, {"a": float("nan")}) == {"a": False}


class TestCanonicalize:
    def test_sorted_unchanged(self):
        mix = MixtureParameters((seg(0.2), seg(0.7)), (0.3, 0.7))
        assert canonicalize_segments(mix) == mix

    def test_swapped_back(self, small_panel):
        a, b = seg(0.2), seg(0.7, bp=-2.0)
        mix = MixtureParameters((b, a), (0.7, 0.3))
        canon = canonicalize_segments(mix)
        assert canon.segments == (a, b) and canon.psi == (0.3, 0.7)
        assert mixture_loglik(small_panel, canon).value == pytest.approx(
            mixture_loglik(small_panel, mix).value, abs=1e-12)

    def test_tie_broken_by_price_coefficient(self):
        a, b = seg(0.4, bp=-1.0), seg(0.4, bp=-3.0)
        canon = canonicalize_segments(MixtureParameters((a, b), (0.5, 0.5)))
        assert canon.segments == (b, a)


class TestFit:
    def test_recovers_single_segment(self, homogeneous_panel):
        res = fit(homogeneous_panel, 1, FitOptions(starts=3))
        assert res.converged
        assert abs(res.parameters.segments[0].pi - 0.40) <= 0.03
        assert res.loglik == pytest.approx(
            mixture_loglik(homogeneous_panel, res.parameters).value, abs=1e-8)
        assert res.loglik >= mixture_loglik(homogeneous_panel, ONE_SEGMENT_TRUTH).value

    def test_standard_errors_scale_with_duplication(self, homogeneous_panel):
        opts = FitOptions(starts=2)
        single = fit(homogeneous_panel, 1, opts)
        double = fit(duplicate(homogeneous_panel), 1, opts)
        for name, se in single.std_errors.items():
            ratio = double.std_errors[name] / se
            assert abs(ratio - 1 / math.sqrt(2)) <= 0.1 / math.sqrt(2), name

    def test_large_panel_standard_errors(self):
        spec = SimulationSpec(ONE_SEGMENT_TRUTH, n_households=1000, n_periods=52, seed=5)
        res = fit(simulate_panel(spec), 1, FitOptions(starts=2))
        ses = np.array(list(res.std_errors.values()))
        assert res.diagnostics["hessian_pd"]
        assert np.all(np.isfinite(ses)) and np.all(ses > 0)

    def test_deterministic(self, small_panel):
        opts = FitOptions(starts=4, seed=3)
        a = fit(small_panel, 2, opts)
        b = fit(small_panel, 2, opts)
        assert a.parameters == b.parameters
        assert a.loglik == b.loglik
        assert a.diagnostics["start_logliks"] == b.diagnostics["start_logliks"]
        np.testing.assert_array_equal(list(a.std_errors.values()), list(b.std_errors.values()))

    def test_threads_do_not_change_result(self, small_panel):
        a = fit(small_panel, 2, FitOptions(starts=4, seed=3, threads=1))
        b = fit(small_panel, 2, FitOptions(starts=4, seed=3, threads=4))
        assert a.parameters == b.parameters and a.loglik == b.loglik

    def test_trace_is_ascending(self, hetero_fit):
        trace = hetero_fit.diagnostics["trace"]
        assert trace
        best = np.maximum.accumulate(trace)
        assert np.all(np.diff(best) >= 0)
        assert hetero_fit.loglik >= max(trace) - 1e-6

    def test_canonical_order(self, hetero_fit):
        pis = [s.pi for s in hetero_fit.parameters.segments]
        assert pis == sorted(pis)

    def test_best_start_wins(self, hetero_fit):
        lls = hetero_fit.diagnostics["start_logliks"]
        assert hetero_fit.diagnostics["best_start"] == int(np.argmax(lls))

    def test_pinned_pi_vector_shorter_by_segments(self):
        assert Parameterization(3, 4).size - Parameterization(3, 4, fixed_pi=0.3).size == 3

    def test_failure_raises(self, small_panel):
        class Broken:
            n_brands = 3

            def evaluate_arrays(self, p, gradient=True):
                nan = np.full(2, np.nan)
                return Evaluation(np.nan, nan, 0, None, nan, nan, nan, np.full((2, 2), np.nan),
                                  nan, nan, nan, nan)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(EstimationError):
                fit(small_panel, 2, FitOptions(starts=2), likelihood=Broken())


@pytest.mark.slow
def test_three_segment_preset_shows_loss_aversion():
    spec = SimulationSpec(reformulation_preset(), prices=PRESET_PRICES, seed=0)
    res = fit(simulate_panel(spec), 3, FitOptions(standard_errors=False))
    for s in res.parameters.segments:
        assert s.beta_l > s.beta_g
