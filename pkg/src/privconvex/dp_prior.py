"""Dirichlet-process prior over convex functions on [0, 1].

A truth is drawn by sampling a gradient scale ``gamma_plus`` and a random
distribution ``F ~ DP(alpha, Unif[0, 1])`` (truncated stick-breaking); its
gradient is ``gamma_plus * (2 F(x) - 1)`` and its minimizer is the median
of ``F``. The marginal law of that minimizer, ``nu``, has CDF
``P{Beta(alpha t, alpha (1 - t)) >= 1/2}`` and a density bounded between
:func:`h_alpha` and :func:`H_alpha`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .errors import DomainError, NumericalError
from .special import regularized_incomplete_beta

__all__ = [
    "DPFunctionSample", "MarginalNu", "CheckReport", "sample_stick_breaking", "dp_cdf", "dp_gradient",
    "regularized_incomplete_beta", "nu_cdf", "nu_quantile", "h_alpha", "H_alpha", "verify_lemma3",
    "check_dp_marginals", "check_first_stick", "check_minimizer_uniform", "sample_stick_weights", "batch_cdf",
    "batch_minimizers", "censored_pit",
]

DEFAULT_TAU = 1e-12


def h_alpha(alpha: float) -> float:
    """Lower bound on the density of ``nu``: ``2**(-alpha - 2) / 3``."""
    return 2.0 ** (-alpha - 2.0) / 3.0


def H_alpha(alpha: float) -> float:
    """Upper bound on the density of ``nu``: ``(3 + 2/e) alpha + 14``."""
    return (3.0 + 2.0 * math.exp(-1.0)) * alpha + 14.0


@dataclass(frozen=True)
class DPFunctionSample:
    """One truth from the prior.

    ``locations`` are sorted and ``weights`` aligned with them;
    ``first_stick`` is the length of the first stick broken off.
    """

    gamma_plus: float
    locations: np.ndarray
    weights: np.ndarray
    residual_mass: float
    concentration: float
    minimizer: float
    first_stick: float

    @property
    def atoms(self) -> list:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def largest_stick(self) -> float:
        return float(self.weights.max())

    def gradient(self, q: float) -> float:
        return dp_gradient(self, q)

    __call__ = gradient


def _median_index(cum: np.ndarray) -> int:
    return int(np.searchsorted(cum, 0.5, side="left"))


def _draw_sticks(alpha, tau, rng):
    chunk = max(16, int(alpha * math.log(1.0 / tau)) + 8)
    weights = []
    remaining = 1.0
    while remaining >= tau:
        v = rng.beta(1.0, alpha, size=chunk)
        for vk in v:
            weights.append(remaining * vk)
            remaining *= 1.0 - vk
            if remaining < tau:
                break
    return np.asarray(weights), remaining


def sample_stick_breaking(alpha: float, tau: float = DEFAULT_TAU, rng: np.random.Generator | None = None,
                          eta_quantile: Callable[[float], float] | None = None) -> DPFunctionSample:
    """Draw a truth from the prior by truncated stick-breaking.

    Sticks are broken until the unassigned mass drops below ``tau``. A draw
    whose cumulative weight passes within ``tau`` of 1/2 is rejected and
    redrawn, since its median could depend on the truncated mass.
    """
    if not alpha > 0:
        raise DomainError(f"concentration must be positive, got {alpha}")
    if not 0 < tau <= 1e-6:
        raise DomainError(f"truncation tolerance must lie in (0, 1e-6], got {tau}")
    rng = rng if rng is not None else np.random.default_rng()
    u = 1.0 - rng.uniform()
    gamma_plus = float(eta_quantile(u)) if eta_quantile is not None else u
    while True:
        w, residual = _draw_sticks(alpha, tau, rng)
        locs = rng.uniform(0.0, 1.0, size=len(w))
        order = np.argsort(locs, kind="stable")
        locs, ws = locs[order], w[order]
        cum = np.cumsum(ws)
        if np.any(np.abs(cum - 0.5) <= tau):
            continue
        k = _median_index(cum)
        return DPFunctionSample(
            gamma_plus=gamma_plus, locations=locs, weights=ws, residual_mass=float(residual),
            concentration=float(alpha), minimizer=float(locs[k]), first_stick=float(w[0]),
        )


def dp_cdf(sample: DPFunctionSample, x: float) -> float:
    """Total weight of atoms at locations ``<= x``."""
    k = np.searchsorted(sample.locations, x, side="right")
    return float(sample.weights[:k].sum())


def dp_gradient(sample: DPFunctionSample, q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"query {q} lies outside [0, 1]")
    return sample.gamma_plus * (2.0 * dp_cdf(sample, q) - 1.0)


# ---------------------------------------------------------------- marginal law of the minimizer

@lru_cache(maxsize=1 << 16)
def _nu_cdf_cached(alpha, t):
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    # P{F(t) >= 1/2} = 1 - I_{1/2}(at, a(1-t)) = I_{1/2}(a(1-t), at), no cancellation near t = 0
    return regularized_incomplete_beta(alpha * (1.0 - t), alpha * t, 0.5)


@lru_cache(maxsize=1 << 16)
def _nu_quantile_cached(alpha, p, tol):
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    if p == 0.5:
        return 0.5
    try:
        t = optimize.brentq(lambda s: _nu_cdf_cached(alpha, s) - p, 0.0, 1.0,
                            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except RuntimeError as exc:
        raise NumericalError("quantile root-finder hit its iteration cap", alpha=alpha, p=p) from exc
    err = abs(_nu_cdf_cached(alpha, t) - p)
    if err > tol:
        raise NumericalError("quantile misses its CDF tolerance", alpha=alpha, p=p, t=t, error=err)
    return t


@dataclass(frozen=True)
class MarginalNu:
    """Law of the prior minimizer for concentration ``alpha``."""

    concentration: float
    cdf_tolerance: float = 1e-9

    def __post_init__(self):
        if not self.concentration > 0:
            raise DomainError("concentration must be positive")

    @property
    def h(self) -> float:
        return h_alpha(self.concentration)

    @property
    def H(self) -> float:
        return H_alpha(self.concentration)

    def cdf(self, t: float) -> float:
        return _nu_cdf_cached(float(self.concentration), float(t))

    def quantile(self, p: float) -> float:
        return _nu_quantile_cached(float(self.concentration), float(p), float(self.cdf_tolerance))

    def mass(self, a: float, b: float) -> float:
        return self.cdf(b) - self.cdf(a)


def nu_cdf(nu: MarginalNu, t: float) -> float:
    return nu.cdf(t)


def nu_quantile(nu: MarginalNu, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p} outside [0, 1]")
    return nu.quantile(p)


# ---------------------------------------------------------------- verification reports

@dataclass
class CheckReport:
    check: str
    alpha: float
    grid: list
    statistics: list = field(default_factory=list)
    passed: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"check": self.check, "alpha": self.alpha, "grid": self.grid,
               "statistics": self.statistics, "pass": self.passed}
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_lemma3(alpha: float, grid: Sequence[float] | None = None, fd_step: float = 1e-4,
                  cdf_accuracy: float = 1e-10) -> CheckReport:
    """Check that finite-difference slopes of ``nu``'s CDF stay within ``[h_alpha, H_alpha]``."""
    if grid is None:
        grid = np.linspace(0.02, 0.98, 97)
    grid = [float(t) for t in grid]
    if any(not fd_step < t < 1.0 - fd_step for t in grid):
        raise DomainError("grid points must lie in (fd_step, 1 - fd_step)")
    nu = MarginalNu(alpha)
    lo, hi = h_alpha(alpha), H_alpha(alpha)
    tol = 1e-3 + 2.0 * cdf_accuracy / fd_step
    stats_ = []
    for t in grid:
        d = (nu.cdf(t + fd_step) - nu.cdf(t - fd_step)) / (2.0 * fd_step)
        stats_.append({"t": t, "derivative": d, "pass": bool(lo - tol <= d <= hi + tol)})
    derivs = [s["derivative"] for s in stats_]
    return CheckReport(
        check="lemma3", alpha=float(alpha), grid=grid, statistics=stats_,
        passed=all(s["pass"] for s in stats_),
        extra={"h_alpha": lo, "H_alpha": hi, "tolerance": tol, "fd_step": fd_step,
               "min_derivative": min(derivs), "max_derivative": max(derivs)},
    )


# ---------------------------------------------------------------- batched sampling for statistics

def sample_stick_weights(alpha: float, n: int, rng: np.random.Generator, tau: float = DEFAULT_TAU):
    """``n`` independent truncated stick-breaking draws as padded ``(n, K)`` arrays.

    Returns ``(locations, weights)``; padding columns carry zero weight.
    Columns are in breaking order.
    """
    block = max(8, int(alpha * math.log(1.0 / tau)) + 8)
    remaining = np.ones(n)
    cols = []
    while True:
        v = rng.beta(1.0, alpha, size=(n, block))
        keep = np.cumprod(1.0 - v, axis=1)
        before = remaining[:, None] * np.concatenate([np.ones((n, 1)), keep[:, :-1]], axis=1)
        # a stick is broken only while the unassigned mass is still >= tau
        cols.append(np.where(before >= tau, before * v, 0.0))
        remaining = remaining * keep[:, -1]
        if not np.any(remaining >= tau):
            break
    weights = np.concatenate(cols, axis=1)
    locations = rng.uniform(0.0, 1.0, size=weights.shape)
    return locations, weights


def batch_cdf(locations: np.ndarray, weights: np.ndarray, t: float) -> np.ndarray:
    return np.where(locations <= t, weights, 0.0).sum(axis=1)


def batch_minimizers(locations: np.ndarray, weights: np.ndarray) -> np.ndarray:
    order = np.argsort(locations, axis=1)
    ls = np.take_along_axis(locations, order, axis=1)
    cum = np.cumsum(np.take_along_axis(weights, order, axis=1), axis=1)
    k = (cum < 0.5).sum(axis=1)
    return ls[np.arange(len(ls)), k]


def _chunks(total, size=20_000):
    while total > 0:
        yield min(size, total)
        total -= size


def _direct_cdf_values(alpha, ts, trials, rng, tau):
    out = np.empty((trials, len(ts)))
    row = 0
    for m in _chunks(trials):
        locs, ws = sample_stick_weights(alpha, m, rng, tau)
        for j, t in enumerate(ts):
            out[row:row + m, j] = batch_cdf(locs, ws, t)
        row += m
    return out


def _self_similar_cdf_values(alpha, cuts, ts, trials, rng, tau):
    edges = np.concatenate([[0.0], np.asarray(cuts, float), [1.0]])
    widths = np.diff(edges)
    masses = rng.dirichlet(alpha * widths, size=trials)
    out = np.zeros((trials, len(ts)))
    for j, t in enumerate(ts):
        cell = int(np.searchsorted(edges, t, side="right") - 1)
        cell = min(cell, len(widths) - 1)
        out[:, j] = masses[:, :cell].sum(axis=1)
        frac = (t - edges[cell]) / widths[cell]
        inner = np.empty(trials)
        row = 0
        for m in _chunks(trials):
            locs, ws = sample_stick_weights(alpha * widths[cell], m, rng, tau)
            inner[row:row + m] = batch_cdf(locs, ws, frac)
            row += m
        out[:, j] += masses[:, cell] * inner
    return out


def censored_pit(values: np.ndarray, dist, r: float, rng: np.random.Generator) -> np.ndarray:
    """Probability integral transform that treats values outside ``(r, 1 - r)`` as censored.

    Values at or below ``r`` map uniformly onto ``[0, cdf(r)]`` and values at
    or above ``1 - r`` onto ``[cdf(1 - r), 1]``, so the output is Unif[0, 1]
    whenever the uncensored values follow ``dist``.
    """
    x = np.asarray(values, dtype=float)
    lo, hi = float(dist.cdf(r)), float(dist.cdf(1.0 - r))
    u = dist.cdf(x)
    v = rng.uniform(size=x.shape)
    u = np.where(x <= r, lo * v, u)
    return np.where(x >= 1.0 - r, hi + (1.0 - hi) * v, u)


def check_dp_marginals(alpha: float, partition: Sequence[float] = (0.25, 0.5, 0.75), trials: int = 100_000,
                       rng: np.random.Generator | None = None, significance: float = 1e-3,
                       held_out: Sequence[float] = (0.25, 0.5, 0.75), self_similar_cuts: Sequence[float] = (0.3, 0.6),
                       tau: float = DEFAULT_TAU, censor_factor: float = 1e3) -> CheckReport:
    """Kolmogorov-Smirnov checks of the stick-breaking sampler.

    Each marginal ``mu([0, t])`` at the cut points in ``partition`` is tested
    against Beta(alpha t, alpha (1 - t)). Separately, ``F`` is rebuilt by
    first drawing the masses of the cells cut at ``self_similar_cuts`` from a
    Dirichlet, then filling each cell with an independent rescaled DP;
    ``F`` at the ``held_out`` points is then compared with direct draws by a
    two-sample test. Significance is Bonferroni-split over all tests.

    Truncation leaves each ``F(t)`` short by less than ``tau``, which KS would
    notice wherever the reference puts real mass below ``tau`` (small
    ``alpha``). Values are therefore censored to ``[r, 1 - r]`` with
    ``r = censor_factor * tau``: the one-sample test maps censored values
    through a randomized probability integral transform, and the two-sample
    test censors both sides alike.
    """
    if trials < 10_000:
        raise DomainError("marginal checks need at least 1e4 trials")
    rng = rng if rng is not None else np.random.default_rng()
    cuts = [float(c) for c in partition if 0.0 < c < 1.0]
    held = [float(t) for t in held_out]
    n_tests = len(cuts) + len(held)
    level = significance / max(n_tests, 1)
    r = censor_factor * tau
    stats_ = []
    if cuts:
        direct = _direct_cdf_values(alpha, cuts, trials, rng, tau)
        for j, t in enumerate(cuts):
            u = censored_pit(direct[:, j], stats.beta(alpha * t, alpha * (1.0 - t)), r, rng)
            res = stats.kstest(u, "uniform")
            stats_.append({"test": "marginal", "t": t, "ks": float(res.statistic),
                           "pvalue": float(res.pvalue), "pass": bool(res.pvalue > level)})
    else:
        # degenerate partition {[0, 1]}: the only cell carries all the mass
        locs, ws = sample_stick_weights(alpha, min(trials, 20_000), rng, tau)
        total = ws.sum(axis=1)
        ok = bool(np.all(total >= 1.0 - tau))
        stats_.append({"test": "total_mass", "min": float(total.min()), "pass": ok})
    if held:
        direct = _direct_cdf_values(alpha, held, trials, rng, tau)
        rebuilt = _self_similar_cdf_values(alpha, self_similar_cuts, held, trials, rng, tau)
        for j, t in enumerate(held):
            res = stats.ks_2samp(np.clip(direct[:, j], r, 1.0 - r), np.clip(rebuilt[:, j], r, 1.0 - r))
            stats_.append({"test": "self_similarity", "t": t, "ks": float(res.statistic),
                           "pvalue": float(res.pvalue), "pass": bool(res.pvalue > level)})
    return CheckReport(
        check="dp_marginals", alpha=float(alpha), grid=list(partition), statistics=stats_,
        passed=all(s["pass"] for s in stats_),
        extra={"trials": trials, "significance": significance, "per_test_level": level,
               "self_similar_cuts": list(self_similar_cuts), "censor_level": r},
    )


def check_first_stick(alpha: float, trials: int = 100_000, rng: np.random.Generator | None = None,
                      n_se: float = 4.0, tau: float = DEFAULT_TAU) -> CheckReport:
    """Empirical ``P{beta_1 > 1/2}`` against ``2**-alpha`` and mean ``beta_1`` against ``1/(1+alpha)``."""
    rng = rng if rng is not None else np.random.default_rng()
    first = np.concatenate([sample_stick_weights(alpha, m, rng, tau)[1][:, 0] for m in _chunks(trials)])
    p0 = 2.0 ** -alpha
    rate = float(np.mean(first > 0.5))
    se = math.sqrt(p0 * (1 - p0) / trials)
    mean0 = 1.0 / (1.0 + alpha)
    mean_se = math.sqrt(alpha / ((1 + alpha) ** 2 * (alpha + 2)) / trials)
    stats_ = [
        {"test": "first_stick_tail", "observed": rate, "expected": p0, "se": se,
         "pass": bool(abs(rate - p0) <= n_se * se)},
        {"test": "first_stick_mean", "observed": float(first.mean()), "expected": mean0, "se": mean_se,
         "pass": bool(abs(first.mean() - mean0) <= n_se * mean_se)},
    ]
    return CheckReport(check="first_stick", alpha=float(alpha), grid=[0.5], statistics=stats_,
                       passed=all(s["pass"] for s in stats_), extra={"trials": trials})


def check_minimizer_uniform(alpha: float = 1e-9, trials: int = 100_000, rng: np.random.Generator | None = None,
                            significance: float = 1e-3, tau: float = DEFAULT_TAU) -> CheckReport:
    """KS test of the minimizer against Unif[0, 1]; meant for ``alpha`` near 0."""
    rng = rng if rng is not None else np.random.default_rng()
    mins = np.concatenate([batch_minimizers(*sample_stick_weights(alpha, m, rng, tau)) for m in _chunks(trials)])
    res = stats.kstest(mins, "uniform")
    stats_ = [{"test": "minimizer_uniform", "ks": float(res.statistic), "pvalue": float(res.pvalue),
               "pass": bool(res.pvalue > significance)}]
    return CheckReport(check="minimizer_uniform", alpha=float(alpha), grid=[], statistics=stats_,
                       passed=stats_[0]["pass"], extra={"trials": trials, "significance": significance})
