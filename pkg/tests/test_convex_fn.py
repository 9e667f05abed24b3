import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privconvex.convex_fn import (
    PiecewiseLinearConvex,
    ResistingOracleState,
    bisection_search,
    eval_subgradient,
    gradient_oracle,
    make_sandwich_function,
    random_piecewise_convex,
    required_in_interval,
    resisting_count,
    resisting_respond,
)
from privconvex.errors import BudgetExceeded, DomainError, NumericalError

ABS03 = PiecewiseLinearConvex((0.0, 0.3, 1.0), (-1.0, 1.0))

seeds = st.integers(0, 2**32 - 1)
unit = st.floats(0.0, 1.0)


def bisect_learner(eps, interval=(0.0, 1.0)):
    return lambda oracle: bisection_search(oracle, eps, interval)


class TestEvalSubgradient:
    def test_interior_segments(self):
        assert eval_subgradient(ABS03, 0.5) == 1.0
        assert eval_subgradient(ABS03, 0.1) == -1.0

    def test_kink_rules(self):
        assert eval_subgradient(ABS03, 0.3) == 0.0
        assert eval_subgradient(ABS03, 0.3, "left") == -1.0
        assert eval_subgradient(ABS03, 0.3, "right") == 1.0

    def test_endpoints_use_adjacent_slope(self):
        assert eval_subgradient(ABS03, 0.0) == -1.0
        assert eval_subgradient(ABS03, 1.0) == 1.0

    @pytest.mark.parametrize("q", [-0.01, 1.01, math.nan])
    def test_outside_domain(self, q):
        with pytest.raises(DomainError):
            eval_subgradient(ABS03, q)

    @given(seeds, unit, unit, st.sampled_from(["mid", "left", "right"]))
    def test_monotone(self, seed, x, y, rule):
        f = random_piecewise_convex(np.random.default_rng(seed))
        x, y = sorted((x, y))
        assert eval_subgradient(f, x, rule) <= eval_subgradient(f, y, rule)

    @given(seeds, unit)
    def test_sign_around_minimizer(self, seed, q):
        f = random_piecewise_convex(np.random.default_rng(seed))
        if q in f.breakpoints:
            return
        g = eval_subgradient(f, q)
        if q < f.minimizer:
            assert g < 0
        elif q > f.minimizer:
            assert g > 0


class TestFamily:
    @pytest.mark.parametrize("bp,sl", [
        ((0.1, 0.5, 1.0), (-1, 1)),
        ((0.0, 0.5, 0.5, 1.0), (-1, 0.5, 1)),
        ((0.0, 0.5, 1.0), (1, -1)),
        ((0.0, 0.5, 1.0), (-1, 0)),
        ((0.0, 0.5, 1.0), (1, 2)),
        ((0.0, 1.0), (-1, 1)),
    ])
    def test_rejects_invalid(self, bp, sl):
        with pytest.raises(DomainError):
            PiecewiseLinearConvex(bp, sl)

    def test_values_pinned_at_zero(self):
        assert ABS03(0.0) == 0.0
        assert ABS03(0.3) == pytest.approx(-0.3)
        assert ABS03(1.0) == pytest.approx(0.4)

    def test_sandwich(self):
        f = make_sandwich_function(0.3, 1.0)
        assert f.breakpoints == (0.0, 0.3, 1.0) and f.slopes == (-1.0, 1.0)
        g = make_sandwich_function(0.5, 2.0)
        assert g.slopes == (-2.0, 2.0) and g.minimizer == 0.5

    @pytest.mark.parametrize("m", [0.0, 1.0, -0.5])
    def test_sandwich_rejects_boundary(self, m):
        with pytest.raises(DomainError):
            make_sandwich_function(m, 1.0)

    @given(seeds, st.floats(1e-6, 1 - 1e-6))
    def test_random_family_minimizer(self, seed, m):
        f = random_piecewise_convex(np.random.default_rng(seed), minimizer=m)
        assert f.minimizer == m

    @given(seeds, st.integers(4, 14))
    def test_bisection_accuracy(self, seed, k):
        f = random_piecewise_convex(np.random.default_rng(seed))
        eps = 2.0 ** -k
        assert abs(bisection_search(gradient_oracle(f), eps) - f.minimizer) <= eps / 2


class TestResistingOracle:
    def test_first_query_tie_goes_right(self):
        s = ResistingOracleState((0.0, 1.0), 2**-6)
        r = resisting_respond(s, 0.5)
        assert r < 0 and s.active_interval == (0.5, 1.0)

    def test_second_query_tie_goes_right(self):
        s = ResistingOracleState((0.0, 1.0), 2**-6)
        s.respond(0.5)
        s.respond(0.75)
        assert s.active_interval == (0.75, 1.0)

    def test_outside_query_leaves_interval(self):
        s = ResistingOracleState((0.0, 1.0), 2**-6)
        r1 = s.respond(0.5)
        r2 = s.respond(0.2)
        assert s.active_interval == (0.5, 1.0)
        assert -1.0 < r2 < r1 < 0.0

    def test_repeated_query_same_answer(self):
        s = ResistingOracleState((0.0, 1.0), 0.01)
        assert s.respond(0.3) == s.respond(0.3)

    @given(st.lists(unit, min_size=1, max_size=40))
    def test_invariants_and_realizability(self, qs):
        s = ResistingOracleState((0.0, 1.0), 1e-3)
        for q in qs:
            before = s.active_interval[1] - s.active_interval[0]
            s.respond(q)
            after = s.active_interval[1] - s.active_interval[0]
            assert after >= before / 2
        locs, vals = zip(*sorted(s.answered.items()))
        assert list(vals) == sorted(vals)
        a, b = s.active_interval
        for x, v in zip(locs, vals):
            if x <= a:
                assert v < 0
            if x >= b:
                assert v > 0
        if any(v0 != v1 and not x0 < 0.5 * (x0 + x1) < x1
               for (x0, v0), (x1, v1) in zip(zip(locs, vals), zip(locs[1:], vals[1:]))):
            # distinct answers at adjacent floats leave no room for a breakpoint
            with pytest.raises(NumericalError):
                s.realize()
            return
        f = s.realize()
        assert a <= f.minimizer <= b
        for x, v in zip(locs, vals):
            for rule in ("mid", "left", "right"):
                assert eval_subgradient(f, x, rule) == v

    def test_adjacent_float_answers(self):
        s = ResistingOracleState((0.0, 1.0), 1e-3)
        s.respond(1.0)
        s.respond(np.nextafter(1.0, 0.0))
        with pytest.raises(NumericalError) as err:
            s.realize()
        assert err.value.diagnostics["locations"] == (np.nextafter(1.0, 0.0), 1.0)

    def test_equal_answers_share_a_segment(self):
        s = ResistingOracleState((0.0, 1.0), 1e-3, active_interval=(0.0, 0.5),
                                 _locs=[0.7, 0.8, 0.9], _vals=[0.5, 0.5, 0.75])
        f = s.realize()
        assert f.breakpoints == pytest.approx((0.0, 0.25, 0.85, 1.0)) and f.slopes == (-1.0, 0.5, 0.75)
        assert all(eval_subgradient(f, q, rule) == v for q, v in s.answered.items() for rule in ("left", "right"))

    def test_lemma_examples(self):
        assert resisting_count(bisect_learner(2**-6), (0.0, 1.0), 2**-6) >= 6
        assert resisting_count(bisect_learner(2**-6), (0.0, 0.5), 2**-6) >= 5
        assert required_in_interval((0.0, 0.01), 0.02) == 0

    @given(seeds)
    def test_bisection_forced_lower_bound(self, seed):
        rng = np.random.default_rng(seed)
        a, b = np.sort(rng.uniform(0, 1, 2))
        eps = 2.0 ** -int(rng.integers(3, 14))
        n = resisting_count(bisect_learner(eps), (a, b), eps)
        assert n >= required_in_interval((a, b), eps)

    def test_budget(self):
        def runaway(oracle):
            for i in range(10_000):
                oracle((i % 97) / 97)
        with pytest.raises(BudgetExceeded):
            resisting_count(runaway, (0.0, 1.0), 2**-6)
