import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from privconvex.dp_prior import (
    DPFunctionSample,
    H_alpha,
    MarginalNu,
    batch_minimizers,
    check_dp_marginals,
    censored_pit,
    check_first_stick,
    dp_cdf,
    dp_gradient,
    h_alpha,
    nu_cdf,
    nu_quantile,
    sample_stick_breaking,
    sample_stick_weights,
    verify_lemma3,
)
from privconvex.errors import DomainError

seeds = st.integers(0, 2**32 - 1)
alphas = st.floats(0.05, 8.0)


def nu_density_oracle(alpha, t):
    """d/dt P{Beta(at, a(1-t)) >= 1/2}, differentiating under the integral.

    The (1 - x)^(b-1) and log(1 - x) singularities at 1 go into quadrature weights.
    """
    a, b = alpha * t, alpha * (1 - t)
    lb = special.betaln(a, b)
    dig = special.digamma(a) - special.digamma(b)

    def smooth(x):
        return math.exp((a - 1) * math.log(x) - lb) * alpha

    main, _ = integrate.quad(lambda x: smooth(x) * (math.log(x) - dig), 0.5, 1.0,
                             weight="alg", wvar=(0.0, b - 1.0), epsabs=1e-13, limit=200)
    logpart, _ = integrate.quad(smooth, 0.5, 1.0, weight="alg-logb", wvar=(0.0, b - 1.0), epsabs=1e-13, limit=200)
    return main - logpart


def single_atom(loc, gamma=1.0):
    return DPFunctionSample(gamma, np.array([loc]), np.array([1.0]), 0.0, 1.0, loc, 1.0)


class TestConstants:
    def test_alpha_one(self):
        assert h_alpha(1.0) == pytest.approx(1 / 24, abs=1e-12)
        assert H_alpha(1.0) == pytest.approx(17 + 2 / math.e, abs=1e-12)
        assert H_alpha(1.0) == pytest.approx(17.7357589, abs=1e-7)


class TestSampler:
    @given(st.floats(0.01, 10.0), seeds)
    def test_sample_invariants(self, alpha, seed):
        s = sample_stick_breaking(alpha, rng=np.random.default_rng(seed))
        assert abs(s.weights.sum() + s.residual_mass - 1.0) <= 1e-12
        assert s.residual_mass <= 1e-12
        assert np.all(np.diff(s.locations) >= 0)
        cum = np.cumsum(s.weights)
        k = int(np.argmax(cum >= 0.5))
        assert s.minimizer == s.locations[k]
        assert 0.0 < s.gamma_plus <= 1.0

    @given(st.floats(0.05, 5.0), seeds, st.floats(1e-6, 0.5))
    def test_gradient_sign_and_monotone(self, alpha, seed, u):
        s = sample_stick_breaking(alpha, rng=np.random.default_rng(seed))
        x = s.minimizer
        if x - u >= 0:
            assert dp_gradient(s, x - u) <= 0
        if x + u <= 1:
            assert dp_gradient(s, x + u) >= 0
        grid = np.linspace(0, 1, 50)
        g = [dp_gradient(s, q) for q in grid]
        assert g == sorted(g)
        assert all(-s.gamma_plus <= v <= s.gamma_plus for v in g)

    def test_tiny_alpha_single_atom(self):
        s = sample_stick_breaking(1e-9, rng=np.random.default_rng(0))
        assert s.first_stick >= 1 - 1e-12
        assert s.minimizer == s.locations[np.argmax(s.weights)]

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_bad_alpha(self, alpha):
        with pytest.raises(DomainError):
            sample_stick_breaking(alpha)

    def test_bad_tau(self):
        with pytest.raises(DomainError):
            sample_stick_breaking(1.0, tau=1e-3)

    def test_first_stick_mean_single_draws(self):
        rng = np.random.default_rng(7)
        first = np.array([sample_stick_breaking(1.0, rng=rng).first_stick for _ in range(20_000)])
        assert abs(first.mean() - 0.5) <= 4 * math.sqrt(1 / 12 / 20_000)
        largest = np.array([sample_stick_breaking(1.0, rng=rng).largest_stick for _ in range(5000)])
        assert np.mean(largest > 0.5) >= 0.5 - 4 * math.sqrt(0.25 / 5000)

    def test_first_stick_report(self):
        rep = check_first_stick(1.0, trials=50_000, rng=np.random.default_rng(1))
        assert rep.passed

    def test_batch_sampler_normalized(self):
        _, w = sample_stick_weights(0.7, 2000, np.random.default_rng(3))
        assert np.all(np.abs(w.sum(axis=1) - 1) <= 1e-12)


class TestCdfAndGradient:
    def test_cdf_examples(self):
        s = single_atom(0.4)
        assert dp_cdf(s, 0.0) == 0.0
        assert dp_cdf(s, 0.39) == 0.0
        assert dp_cdf(s, 0.41) == pytest.approx(1.0)
        assert dp_cdf(s, 1.0) == 1.0

    def test_gradient_examples(self):
        s = DPFunctionSample(0.5, np.array([0.2, 0.6]), np.array([0.8, 0.2]), 0.0, 1.0, 0.2, 0.8)
        assert dp_gradient(s, 0.3) == pytest.approx(0.3)
        assert dp_gradient(s, 0.0) == -0.5
        half = DPFunctionSample(1.0, np.array([0.2, 0.6]), np.array([0.5, 0.5]), 0.0, 1.0, 0.2, 0.5)
        assert dp_gradient(half, 0.3) == 0.0

    def test_sampled_cdf_normalization(self):
        s = sample_stick_breaking(2.0, rng=np.random.default_rng(0))
        assert 1 - 1e-12 <= dp_cdf(s, 1.0) <= 1.0


class TestMarginalNu:
    @given(alphas, st.floats(0.001, 0.999))
    def test_cdf_matches_beta_survival(self, alpha, t):
        expected = stats.beta(alpha * t, alpha * (1 - t)).sf(0.5)
        assert nu_cdf(MarginalNu(alpha), t) == pytest.approx(expected, abs=1e-9)

    def test_cdf_examples(self):
        nu = MarginalNu(2.0)
        assert nu.cdf(0.5) == pytest.approx(0.5, abs=1e-14)
        assert nu.cdf(0.0) == 0.0 and nu.cdf(1.0) == 1.0
        assert nu.cdf(1e-9) < 1e-6 and nu.cdf(1 - 1e-9) > 1 - 1e-6

    @given(alphas, st.floats(0, 1), st.floats(0, 1))
    def test_cdf_monotone(self, alpha, s, t):
        s, t = sorted((s, t))
        nu = MarginalNu(alpha)
        assert nu.cdf(s) <= nu.cdf(t) + 1e-15

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 5.0])
    def test_quantile_examples(self, alpha):
        nu = MarginalNu(alpha)
        assert nu_quantile(nu, 0.5) == 0.5
        assert nu_quantile(nu, 0.0) == 0.0 and nu_quantile(nu, 1.0) == 1.0
        assert nu.cdf(nu.quantile(0.3)) == pytest.approx(0.3, abs=1e-8)

    @given(alphas, st.floats(0.01, 0.99))
    def test_round_trip(self, alpha, t):
        nu = MarginalNu(alpha)
        assert nu.quantile(nu.cdf(t)) == pytest.approx(t, abs=1e-8)

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            nu_quantile(MarginalNu(1.0), 1.5)

    @pytest.mark.parametrize("alpha", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize("t", [0.05, 0.3, 0.5, 0.81])
    def test_finite_difference_matches_quadrature(self, alpha, t):
        nu = MarginalNu(alpha)
        step = 1e-4
        fd = (nu.cdf(t + step) - nu.cdf(t - step)) / (2 * step)
        assert fd == pytest.approx(nu_density_oracle(alpha, t), rel=1e-5, abs=1e-6)


class TestLemma3:
    @pytest.mark.parametrize("alpha", [0.25, 1.0, 4.0])
    def test_grid_passes(self, alpha):
        rep = verify_lemma3(alpha)
        assert rep.passed and len(rep.statistics) == 97
        assert rep.to_dict()["pass"] is True

    def test_symmetric(self):
        rep = verify_lemma3(1.0)
        d = [s["derivative"] for s in rep.statistics]
        assert np.allclose(d, d[::-1], atol=rep.extra["tolerance"])

    def test_rejects_edge_grid(self):
        with pytest.raises(DomainError):
            verify_lemma3(1.0, grid=[0.0, 0.5])


class TestMarginals:
    def test_partition_and_self_similarity(self):
        rep = check_dp_marginals(1.0, trials=20_000, rng=np.random.default_rng(11))
        assert rep.passed
        assert {s["test"] for s in rep.statistics} == {"marginal", "self_similarity"}

    def test_degenerate_partition(self):
        rep = check_dp_marginals(1.0, partition=(), held_out=(), trials=10_000, rng=np.random.default_rng(0))
        assert rep.passed and rep.statistics[0]["test"] == "total_mass"

    def test_too_few_trials(self):
        with pytest.raises(DomainError):
            check_dp_marginals(1.0, trials=100)

    @pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5])
    def test_small_alpha_not_tripped_by_truncation(self, alpha):
        # the reference puts several percent of its mass below the truncation level here
        rep = check_dp_marginals(alpha, trials=20_000, rng=np.random.default_rng(int(alpha * 100)))
        assert rep.passed, rep.statistics
        assert rep.extra["censor_level"] == pytest.approx(1e-9)

    def test_censored_pit_is_uniform_on_exact_draws(self):
        rng = np.random.default_rng(4)
        dist = stats.beta(0.03, 0.05)
        x = dist.rvs(size=50_000, random_state=rng)
        assert np.mean(x <= 1e-9) > 0.2
        u = censored_pit(x, dist, 1e-9, rng)
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_censored_pit_censors(self):
        u = censored_pit(np.array([0.0, 0.5, 1.0]), stats.uniform(), 0.1, np.random.default_rng(0))
        assert 0 <= u[0] <= 0.1 and u[1] == 0.5 and 0.9 <= u[2] <= 1

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", [0.25, 1.0, 4.0])
    def test_minimizer_density_within_bounds(self, alpha):
        n, bins = 100_000, 20
        mins = np.concatenate([batch_minimizers(*sample_stick_weights(alpha, 20_000, np.random.default_rng([int(alpha * 100), i])))
                               for i in range(n // 20_000)])
        counts = np.histogram(mins, bins=bins, range=(0, 1))[0]
        p = counts / n
        se = np.sqrt(np.maximum(p * (1 - p), 1 / n) / n)
        density = p * bins
        assert np.all(density >= h_alpha(alpha) - 4 * se * bins)
        assert np.all(density <= H_alpha(alpha) + 4 * se * bins)
