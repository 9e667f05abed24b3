import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from privconvex.convex_fn import gradient_oracle, make_sandwich_function, random_piecewise_convex
from privconvex.errors import BudgetExceeded, InfeasibleError, RegimeError
from privconvex.learner_minimax import (
    MinimaxConfig,
    expected_query_count,
    extract_planted_candidates,
    halvings,
    run_minimax,
    solve_grid_K,
)

seeds = st.integers(0, 2**32 - 1)


@st.composite
def configs(draw):
    k_eps = draw(st.integers(4, 16))
    L = draw(st.integers(1, 10))
    k_delta = draw(st.integers(0, k_eps - 1))
    delta = 2.0 ** -k_delta * draw(st.sampled_from([1.0, 0.9, 0.75, 0.6]))
    assume(2 * 2.0 ** -k_eps <= delta <= 1.0 / L)
    cfg = MinimaxConfig(2.0 ** -k_eps, delta, L)
    if not cfg.dyadic:
        try:
            solve_grid_K(delta, L)
        except InfeasibleError:
            assume(False)
    return cfg


def run_at(cfg, truth, rule="mid"):
    return run_minimax(cfg, gradient_oracle(make_sandwich_function(truth), rule))


class TestConfig:
    @pytest.mark.parametrize("eps,delta,L", [(0.1, 0.1, 2), (2**-10, 0.5, 4), (2**-10, 2**-6, 0), (0, 0.1, 1)])
    def test_regime_violations(self, eps, delta, L):
        with pytest.raises(RegimeError):
            MinimaxConfig(eps, delta, L)

    def test_names_inequality(self):
        with pytest.raises(RegimeError, match="delta <= 1/L"):
            MinimaxConfig(2**-10, 0.5, 4)

    def test_grid_K_examples(self):
        assert solve_grid_K(0.1, 4) == 1
        assert solve_grid_K(0.3, 2) == 0
        assert solve_grid_K(2**-6, 8) == 3
        with pytest.raises(InfeasibleError):
            solve_grid_K(2**-6, 4)

    @given(st.floats(1e-4, 0.5), st.integers(2, 30))
    def test_grid_K_definition(self, delta, L):
        assume(delta > 2.0 ** -L and delta <= 1.0 / L)
        try:
            K = solve_grid_K(delta, L)
        except InfeasibleError:
            assert not any(delta <= 2.0 ** -k / (L - k) <= 2 * delta for k in range(L))
            return
        assert delta * (1 - 1e-12) <= 2.0 ** -K / (L - K) <= 2 * delta * (1 + 1e-12)
        assert all(not (delta <= 2.0 ** -k / (L - k) <= 2 * delta) for k in range(K))


class TestCounts:
    def test_dyadic_example(self):
        cfg = MinimaxConfig(2**-10, 2**-6, 4)
        t, est = run_at(cfg, 0.77)
        assert t.reported_count == 14 == len(t)
        assert abs(est - 0.77) <= cfg.eps / 2

    def test_grid_example(self):
        cfg = MinimaxConfig(2**-10, 2**-3, 4)
        t, _ = run_at(cfg, 0.4)
        assert t.reported_count == 15 and len(t) == 16 and t.phases[0] == "trivial"

    @given(configs(), seeds)
    def test_count_truth_independent(self, cfg, seed):
        rng = np.random.default_rng(seed)
        f = random_piecewise_convex(rng)
        t, _ = run_minimax(cfg, gradient_oracle(f))
        assert t.reported_count == expected_query_count(cfg)

    @given(configs())
    def test_count_within_bounds(self, cfg):
        n = expected_query_count(cfg)
        L, r = cfg.L, math.log2(cfg.delta / cfg.eps)
        assert n >= 2 * L + r - 2 - 1e-9
        upper = 2 * L + r if L >= math.log2(1 / cfg.delta) else L + math.log2(1 / cfg.eps)
        assert n <= math.ceil(upper - 1e-9) + 1

    def test_halvings(self):
        assert halvings(1.0, 2**-10) == 10
        assert halvings(0.001, 0.01) == 0
        assert halvings(0.025, 2**-10) == 5


class TestAccuracyAndPrivacy:
    @given(configs(), seeds, st.sampled_from(["mid", "left", "right"]))
    def test_accuracy(self, cfg, seed, rule):
        f = random_piecewise_convex(np.random.default_rng(seed))
        _, est = run_minimax(cfg, gradient_oracle(f, rule))
        assert abs(est - f.minimizer) <= cfg.eps / 2

    @given(configs(), seeds)
    def test_planted_transcripts_identical(self, cfg, seed):
        rng = np.random.default_rng(seed)
        seqs = set()
        for s, e in extract_planted_candidates(cfg):
            x = rng.uniform(s, e)
            x = x if x > 0 else e / 2
            t, est = run_minimax(cfg, gradient_oracle(random_piecewise_convex(rng, minimizer=x)))
            seqs.add(tuple(t.queries))
            assert abs(est - x) <= cfg.eps / 2
        assert len(seqs) == 1

    @given(configs())
    def test_planted_candidates_separated(self, cfg):
        starts = sorted(s for s, _ in extract_planted_candidates(cfg))
        assert len(starts) == cfg.L
        assert all(b - a >= cfg.delta * (1 - 1e-9) for a, b in zip(starts, starts[1:]))

    def test_budget(self):
        cfg = MinimaxConfig(2**-10, 2**-6, 4)
        with pytest.raises(BudgetExceeded):
            run_minimax(cfg, gradient_oracle(make_sandwich_function(0.3)), budget=5)
