"""Estimators for an eavesdropper who sees the learner's queries but never its responses."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

PAIR_SLACK = 1e-12


@dataclass(frozen=True)
class AdversaryView:
    """Query-only view. There is deliberately no field for responses."""

    queries: tuple
    delta: float
    L: int
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(float(q) for q in self.queries))


def proportional_sampling(view: AdversaryView, rng: np.random.Generator) -> float:
    if not view.queries:
        raise DomainError("proportional sampling needs at least one query")
    return view.queries[int(rng.integers(len(view.queries)))]


def find_guess_pairs(queries: Sequence[float], eps: float) -> list:
    """Non-overlapping consecutive queries ``(q, q')`` with ``0 < q' - q <= eps``, scanned left to right."""
    pairs = []
    i = 0
    while i + 1 < len(queries):
        q0, q1 = queries[i], queries[i + 1]
        if 0.0 < q1 - q0 <= eps + PAIR_SLACK:
            pairs.append((q0, q1))
            i += 2
        else:
            i += 1
    return pairs


def guess_pair_adversary(view: AdversaryView, eps: float, rng: np.random.Generator) -> float:
    """Midpoint of a uniformly chosen eps-close pair; proportional sampling if there is none."""
    pairs = find_guess_pairs(view.queries, eps)
    if not pairs:
        return proportional_sampling(view, rng)
    q0, q1 = pairs[int(rng.integers(len(pairs)))]
    return 0.5 * (q0 + q1)


def greedy_cover(points: Sequence[float], radius: float) -> list:
    """Optimal 1-d cover: each center sits ``radius`` right of the leftmost uncovered point."""
    if not radius > 0:
        raise DomainError("radius must be positive")
    centers = []
    for p in sorted(points):
        if not centers or p > centers[-1] + radius:
            centers.append(p + radius)
    return centers


def covering_number_1d(points: Sequence[float], radius: float) -> int:
    return len(greedy_cover(points, radius))


def covering_set_adversary(candidates: Sequence[float], radius: float, rng: np.random.Generator) -> float:
    if len(candidates) == 0:
        raise DomainError("covering-set adversary needs at least one candidate")
    centers = greedy_cover(candidates, radius)
    return centers[int(rng.integers(len(centers)))]


def minimax_candidates(view: AdversaryView, eps: float) -> list:
    """Left ends of the eps-intervals ``[q, q + eps)`` probed by guess pairs.

    The minimax strategy's information set is the union of these intervals.
    Since ``eps <= delta``, the greedy center ``q + delta/2`` covers a whole
    interval, so covering the left ends covers the set.
    """
    return [a for a, _ in find_guess_pairs(view.queries, eps)]


def bayes_localized_points(view: AdversaryView, phase1_steps: int) -> list:
    """Per-piece localized point from a Bayesian transcript's public structure.

    Phase sizes are fixed by the configuration: ``phase1_steps`` queries,
    then ``L - 1`` cut points, then ``L`` medians, then the searches. Each
    search query is attributed to the piece (between consecutive cut points)
    it falls in; the last one is that piece's localized point, or its median
    when the search was empty.
    """
    L = view.L
    q = view.queries
    cuts = list(q[phase1_steps:phase1_steps + L - 1])
    medians = list(q[phase1_steps + L - 1:phase1_steps + 2 * L - 1])
    if len(medians) != L:
        raise DomainError("transcript is shorter than the configured phase structure")
    points = list(medians)
    for x in q[phase1_steps + 2 * L - 1:]:
        points[bisect.bisect_right(cuts, x)] = x
    return points


def reconstruction_adversary(view: AdversaryView, phase1_steps: int, rng: np.random.Generator) -> float:
    """Uniform draw among the ``L`` localized points recovered from the transcript."""
    points = bayes_localized_points(view, phase1_steps)
    return points[int(rng.integers(len(points)))]
