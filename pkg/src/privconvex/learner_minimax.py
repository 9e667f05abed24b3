"""Minimax-private querying strategy.

The learner plants ``L`` guesses, each a pair of queries ``(q, q + eps)``
that tests whether the minimizer lies in ``[q, q + eps]``. Guesses sit
along a bisection path (every guess at the midpoint of the current
interval); once one of them is correct the path always continues into the
right half, so every truth planted in a guess interval produces the same
query sequence. When ``delta > 2**-L`` the path is cut short after ``K``
guesses and the rest are spread on an even grid.

The schedule is written as a generator that yields ``(query, phase)`` and
receives the oracle response through ``send``; :func:`run_minimax` drives
it against a scalar oracle and :mod:`privconvex.multidim` drives several in
lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Generator

from .convex_fn import default_budget
from .errors import BudgetExceeded, InfeasibleError, RegimeError
from .transcript import QueryTranscript

_REL = 1e-12


@dataclass(frozen=True)
class MinimaxConfig:
    eps: float
    delta: float
    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise RegimeError(f"privacy level L must be a positive integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if not self.eps > 0:
            raise RegimeError("eps must be positive")
        if 2 * self.eps > self.delta * (1 + _REL):
            raise RegimeError(f"2*eps <= delta violated: eps={self.eps}, delta={self.delta}")
        if self.delta > (1.0 / self.L) * (1 + _REL):
            raise RegimeError(f"delta <= 1/L violated: delta={self.delta}, L={self.L}")

    @property
    def dyadic(self) -> bool:
        """True when ``delta <= 2**-L``: all guesses ride the bisection path."""
        return self.delta <= 2.0 ** -self.L


def solve_grid_K(delta: float, L: int) -> int:
    """Smallest ``K`` in ``{0, ..., L-1}`` with ``2**-K / (L - K)`` in ``[delta, 2 delta]``."""
    if delta <= 2.0 ** -L:
        raise InfeasibleError(f"grid split needs delta > 2**-L; got delta={delta}, L={L}")
    for K in range(L):
        ell = 2.0 ** -K / (L - K)
        if delta * (1 - _REL) <= ell <= 2 * delta * (1 + _REL):
            return K
    raise InfeasibleError(f"no K in [0, {L - 1}] puts 2**-K/(L-K) in [{delta}, {2 * delta}]")


def halvings(length: float, eps: float) -> int:
    """Bisection steps needed to bring ``length`` down to ``eps``."""
    n = 0
    while length > eps:
        length *= 0.5
        n += 1
    return n


def _guess(q, eps, first_phase, second_phase):
    r0 = yield q, first_phase
    r1 = yield q + eps, second_phase
    return (r0 <= 0.0 and r1 > 0.0), r0


def minimax_schedule(cfg: MinimaxConfig) -> Generator[tuple, float, float]:
    """Adaptive query schedule; the generator's return value is the estimate."""
    eps, delta, L = cfg.eps, cfg.delta, cfg.L
    a, b = 0.0, 1.0
    found = None

    def walk(q, correct, r0):
        nonlocal a, b, found
        if found is None and correct:
            found = q
        if found is not None or r0 <= 0.0:
            a = q
        else:
            b = q

    if cfg.dyadic:
        for _ in range(L):
            q = 0.5 * (a + b)
            correct, r0 = yield from _guess(q, eps, "guess", "guess")
            walk(q, correct, r0)
        tail_length = 2.0 ** -L
    else:
        K = solve_grid_K(delta, L)
        correct, _ = yield from _guess(0.0, eps, "trivial", "guess")
        if correct:
            found = 0.0
        for _ in range(K):
            q = 0.5 * (a + b)
            correct, r0 = yield from _guess(q, eps, "guess", "guess")
            walk(q, correct, r0)
        ell = (b - a) / (L - K)
        n_left = 0
        for j in range(1, L - K):
            g = a + j * ell
            correct, r0 = yield from _guess(g, eps, "grid", "grid")
            if found is None and correct:
                found = g
            n_left += r0 <= 0.0
        a, b = a + n_left * ell, a + (n_left + 1) * ell
        tail_length = 2.0 ** -K / (L - K)

    n_tail = halvings(tail_length, eps)
    if found is None:
        for _ in range(n_tail):
            q = 0.5 * (a + b)
            r = yield q, "bisect"
            if r <= 0.0:
                a = q
            else:
                b = q
        return 0.5 * (a + b)
    for _ in range(n_tail):
        yield 1.0, "fill"
    return found + 0.5 * eps


def drive(schedule: Generator, oracle: Callable[[float], float], transcript: QueryTranscript,
          budget: int | None = None):
    """Feed oracle responses into ``schedule`` until it returns; yields its estimate."""
    try:
        q, phase = next(schedule)
        while True:
            if budget is not None and len(transcript) >= budget:
                raise BudgetExceeded(f"strategy exceeded its budget of {budget} queries")
            r = oracle(q)
            transcript.record(q, r, phase)
            q, phase = schedule.send(r)
    except StopIteration as stop:
        return stop.value


def run_minimax(cfg: MinimaxConfig, oracle: Callable[[float], float], seed: int | None = None,
                budget: int | None = None) -> tuple:
    """Run the strategy against ``oracle``; returns ``(transcript, estimate)``.

    The strategy uses no randomness; ``seed`` is only recorded.
    """
    transcript = QueryTranscript(seed=seed)
    budget = budget if budget is not None else default_budget(cfg.eps, cfg.L)
    estimate = drive(minimax_schedule(cfg), oracle, transcript, budget)
    return transcript, estimate


def expected_query_count(cfg: MinimaxConfig) -> int:
    """Reported query count; the strategy's count does not depend on the truth."""
    if cfg.dyadic:
        return 2 * cfg.L + halvings(2.0 ** -cfg.L, cfg.eps)
    K = solve_grid_K(cfg.delta, cfg.L)
    return 2 * cfg.L - 1 + halvings(2.0 ** -K / (cfg.L - K), cfg.eps)


def extract_planted_candidates(cfg: MinimaxConfig) -> list:
    """The ``L`` eps-intervals whose truths all yield one and the same query sequence."""
    eps, L = cfg.eps, cfg.L
    if cfg.dyadic:
        starts = [1.0 - 2.0 ** -i for i in range(1, L + 1)]
    else:
        K = solve_grid_K(cfg.delta, L)
        ell = 2.0 ** -K / (L - K)
        base = 1.0 - 2.0 ** -K
        starts = [0.0] + [1.0 - 2.0 ** -i for i in range(1, K + 1)]
        starts += [base + i * ell for i in range(1, L - K)]
    return [(s, s + eps) for s in starts]
