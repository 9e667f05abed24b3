"""Piecewise-linear convex functions on [0, 1] and first-order oracles.

Besides the concrete function family this module hosts the resisting
oracle: an adaptive responder that keeps the minimizer ambiguous inside a
shrinking interval, so that any accurate learner is forced to spend about
``log2(|I| / eps)`` queries inside a chosen interval ``I``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded, DomainError, NumericalError

SUBGRADIENT_RULES = ("mid", "left", "right")


def _check_unit(q: float, name: str = "query") -> float:
    q = float(q)
    if not (0.0 <= q <= 1.0) or math.isnan(q):
        raise DomainError(f"{name} {q!r} lies outside [0, 1]")
    return q


@dataclass(frozen=True)
class PiecewiseLinearConvex:
    """Convex function on [0, 1] given by breakpoints and segment slopes.

    ``slopes[k]`` is the derivative on ``(breakpoints[k], breakpoints[k+1])``.
    The function is pinned to ``f(0) = 0``; only its gradient matters to a
    learner.
    """

    breakpoints: tuple
    slopes: tuple
    subgradient: str = "mid"

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise DomainError("breakpoints must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(sl) != len(bp) - 1:
            raise DomainError("need exactly one slope per segment")
        if any(s1 < s0 for s0, s1 in zip(sl, sl[1:])):
            raise DomainError("slopes must be nondecreasing (convexity)")
        if any(s == 0.0 for s in sl) or not (sl[0] < 0.0 < sl[-1]):
            raise DomainError("need a negative slope followed by a positive one, and no flat segment")
        if self.subgradient not in SUBGRADIENT_RULES:
            raise DomainError(f"subgradient rule must be one of {SUBGRADIENT_RULES}")

    @property
    def minimizer(self) -> float:
        k = next(i for i, s in enumerate(self.slopes) if s > 0.0)
        return self.breakpoints[k]

    def __call__(self, x):
        """Function value, ``f(0) = 0``."""
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        sl = np.asarray(self.slopes)
        widths = np.clip(x[..., None] - bp[:-1], 0.0, np.diff(bp))
        return (widths * sl).sum(axis=-1)


def eval_subgradient(f: PiecewiseLinearConvex, q: float, rule: str | None = None) -> float:
    """Subgradient of ``f`` at ``q``.

    Interior points of a segment get the segment slope. At an interior
    breakpoint the one-sided slopes are combined according to ``rule``
    (``"mid"`` by default). The endpoints 0 and 1 return the adjacent slope.
    """
    q = _check_unit(q)
    rule = rule or f.subgradient
    bp, sl = f.breakpoints, f.slopes
    k = bisect.bisect_right(bp, q) - 1
    if k >= len(sl):
        return sl[-1]
    if q == bp[k] and k > 0:
        left, right = sl[k - 1], sl[k]
        if rule == "left":
            return left
        if rule == "right":
            return right
        return 0.5 * (left + right)
    return sl[k]


def make_sandwich_function(minimizer: float, base_slope: float = 1.0) -> PiecewiseLinearConvex:
    """V-shaped function with slopes ``-base_slope`` and ``+base_slope`` meeting at ``minimizer``."""
    minimizer = float(minimizer)
    if not 0.0 < minimizer < 1.0:
        raise DomainError(f"minimizer must lie strictly inside (0, 1), got {minimizer}")
    if not base_slope > 0:
        raise DomainError("base_slope must be positive")
    return PiecewiseLinearConvex((0.0, minimizer, 1.0), (-base_slope, base_slope))


def random_piecewise_convex(rng: np.random.Generator, minimizer: float | None = None,
                            max_pieces: int = 4) -> PiecewiseLinearConvex:
    """Random member of the family with a prescribed (or uniform) interior minimizer.

    Slopes on each side are sorted draws, so the result is convex and the
    minimizer is the only breakpoint where the sign changes.
    """
    if minimizer is None:
        minimizer = rng.uniform(0.0, 1.0)
        while minimizer == 0.0:
            minimizer = rng.uniform(0.0, 1.0)
    n_left = int(rng.integers(0, max_pieces))
    n_right = int(rng.integers(0, max_pieces))
    left_bp = np.sort(rng.uniform(0.0, minimizer, size=n_left))
    right_bp = np.sort(rng.uniform(minimizer, 1.0, size=n_right))
    bp = np.unique(np.concatenate([[0.0], left_bp, [minimizer], right_bp, [1.0]]))
    n_neg = int(np.searchsorted(bp, minimizer))
    n_pos = len(bp) - 1 - n_neg
    neg = np.sort(-rng.uniform(0.01, 1.0, size=n_neg))
    pos = np.sort(rng.uniform(0.01, 1.0, size=n_pos))
    return PiecewiseLinearConvex(tuple(bp), tuple(np.concatenate([neg, pos])))


def gradient_oracle(f: PiecewiseLinearConvex, rule: str | None = None) -> Callable[[float], float]:
    return lambda q: eval_subgradient(f, q, rule)


def bisection_search(oracle: Callable[[float], float], eps: float, interval=(0.0, 1.0)) -> float:
    """Plain bisection to eps-accuracy; a response ``<= 0`` means the minimizer is at or right of q."""
    a, b = map(float, interval)
    while b - a > eps:
        q = 0.5 * (a + b)
        if oracle(q) <= 0.0:
            a = q
        else:
            b = q
    return 0.5 * (a + b)


@dataclass
class ResistingOracleState:
    """Adaptive adversarial oracle defending ``host_interval``.

    Every answer stays consistent with some member of the family whose
    minimizer sits in ``active_interval``; in-interval queries shrink that
    interval to its larger side, so it loses at most half its length per
    query.
    """

    host_interval: tuple = (0.0, 1.0)
    accuracy: float = 0.0
    active_interval: tuple = field(default=None)
    _locs: list = field(default_factory=list, repr=False)
    _vals: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        a, b = map(float, self.host_interval)
        if not 0.0 <= a < b <= 1.0:
            raise DomainError(f"host interval {self.host_interval} must satisfy 0 <= a < b <= 1")
        self.host_interval = (a, b)
        if self.active_interval is None:
            self.active_interval = (a, b)

    @property
    def answered(self) -> dict:
        return dict(zip(self._locs, self._vals))

    def _neighbors(self, q):
        i = bisect.bisect_left(self._locs, q)
        lo = self._vals[i - 1] if i > 0 else -1.0
        hi = self._vals[i] if i < len(self._vals) else 1.0
        return i, lo, hi

    def respond(self, q: float) -> float:
        q = _check_unit(q)
        i, lo, hi = self._neighbors(q)
        if i < len(self._locs) and self._locs[i] == q:
            return self._vals[i]
        a, b = self.active_interval
        if a < q < b:
            # tie keeps the right half
            if q - a > b - q:
                self.active_interval = (a, q)
                go_right = False
            else:
                self.active_interval = (q, b)
                go_right = True
        else:
            go_right = q <= a
        if go_right:
            value = 0.5 * (lo + min(hi, 0.0))
        else:
            value = 0.5 * (max(lo, 0.0) + hi)
        self._locs.insert(i, q)
        self._vals.insert(i, value)
        return value

    __call__ = respond

    def realize(self) -> PiecewiseLinearConvex:
        """A family member reproducing every answer, minimized at the middle of ``active_interval``.

        Each answered location sits strictly inside a segment whose slope is
        the issued value (or at 0 or 1), so the returned function answers
        identically under any subgradient rule. Neighbouring answers with
        equal values share a segment. Raises :class:`NumericalError` when two
        different answers sit at adjacent floats, since no breakpoint fits
        between them.
        """
        a, b = self.active_interval
        m = 0.5 * (a + b)
        pairs = list(zip(self._locs, self._vals))
        slopes, cuts = [], []
        for side, default in (([p for p in pairs if p[0] < m], -1.0), ([p for p in pairs if p[0] > m], 1.0)):
            if slopes:
                cuts.append(m)
            if not side:
                slopes.append(default)
                continue
            slopes.append(side[0][1])
            for (x0, v0), (x1, v1) in zip(side, side[1:]):
                if v1 == v0:
                    continue
                c = 0.5 * (x0 + x1)
                if not x0 < c < x1:
                    raise NumericalError("no breakpoint fits between adjacent answered locations",
                                         locations=(x0, x1), values=(v0, v1))
                cuts.append(c)
                slopes.append(v1)
        return PiecewiseLinearConvex(tuple([0.0] + cuts + [1.0]), tuple(slopes))


def resisting_respond(state: ResistingOracleState, q: float) -> float:
    return state.respond(q)


def default_budget(eps: float, privacy_level: int = 1) -> int:
    return 10 * (math.ceil(math.log2(1.0 / eps)) + 2 * privacy_level)


def resisting_count(strategy: Callable[[Callable[[float], float]], float], interval: Sequence[float],
                    eps: float, budget: int | None = None, privacy_level: int = 1) -> int:
    """Run ``strategy`` against a fresh resisting oracle and count its queries inside ``interval``.

    ``strategy`` receives the oracle callable and returns its estimate.
    Raises :class:`BudgetExceeded` if it submits more than ``budget`` queries.
    """
    state = ResistingOracleState(tuple(interval), eps)
    budget = budget if budget is not None else default_budget(eps, privacy_level)
    a, b = state.host_interval
    submitted = []

    def oracle(q):
        if len(submitted) >= budget:
            raise BudgetExceeded(f"strategy exceeded its budget of {budget} queries")
        submitted.append(float(q))
        return state.respond(q)

    strategy(oracle)
    return sum(1 for q in submitted if a <= q <= b)


def required_in_interval(interval: Sequence[float], eps: float) -> int:
    """``ceil(log2(|I| / eps))``, floored at zero."""
    length = float(interval[1]) - float(interval[0])
    if length <= eps:
        return 0
    return max(0, math.ceil(math.log2(length / eps) - 1e-12))
