"""Separable objectives on [0, 1]^d, searched one axis at a time in lockstep."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .adversary import AdversaryView, covering_number_1d, guess_pair_adversary
from .audit import privacy_slack, wilson_ci
from .convex_fn import eval_subgradient, make_sandwich_function, random_piecewise_convex
from .errors import RegimeError
from .learner_minimax import MinimaxConfig, extract_planted_candidates, minimax_schedule
from .transcript import QueryTranscript

PAD = "pad"


@dataclass(frozen=True)
class SeparableFunction:
    coordinates: tuple

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))

    @property
    def d(self) -> int:
        return len(self.coordinates)

    @property
    def minimizer(self) -> np.ndarray:
        return np.array([f.minimizer for f in self.coordinates])

    def gradient(self, q: Sequence[float]) -> np.ndarray:
        return np.array([eval_subgradient(f, x) for f, x in zip(self.coordinates, q)])

    def __call__(self, x: Sequence[float]) -> float:
        return float(sum(f(xi) for f, xi in zip(self.coordinates, x)))


@dataclass(frozen=True)
class MinimaxDConfig:
    eps: float
    delta: float
    L: int
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise RegimeError(f"dimension must be a positive integer, got {self.d}")
        self.axis_config  # validates

    @property
    def axis_budget(self) -> int:
        m = round(self.L ** (1.0 / self.d))
        if m < 1 or m ** self.d != self.L:
            raise RegimeError(f"L**(1/d) must be an integer: L={self.L}, d={self.d}")
        return m

    @property
    def axis_config(self) -> MinimaxConfig:
        return MinimaxConfig(self.eps, self.delta, self.axis_budget)


def expected_vector_count(cfg: MinimaxDConfig) -> int:
    """``2 L**(1/d) + ceil(log2(max(2**-L**(1/d), delta) / eps))``."""
    m = cfg.axis_budget
    return 2 * m + math.ceil(math.log2(max(2.0 ** -m, cfg.delta) / cfg.eps) - 1e-12)


def run_minimax_d(cfg: MinimaxDConfig, oracle: Callable[[np.ndarray], np.ndarray],
                  seed: int | None = None) -> tuple:
    """Run one 1-d schedule per axis on a shared vector-query clock.

    Axes that finish early are padded with queries at 1. Returns
    ``(transcript, estimate)`` where transcript queries are length-``d``
    lists and phases are per-axis tag lists.
    """
    axis_cfg = cfg.axis_config
    schedules = [minimax_schedule(axis_cfg) for _ in range(cfg.d)]
    pending = [next(s) for s in schedules]
    estimate = [None] * cfg.d
    t = QueryTranscript(seed=seed)
    while any(e is None for e in estimate):
        q = [p[0] if p is not None else 1.0 for p in pending]
        phases = [p[1] if p is not None else PAD for p in pending]
        r = np.asarray(oracle(np.array(q)), dtype=float)
        t.record(q, r.tolist(), phases)
        for i, s in enumerate(schedules):
            if pending[i] is None:
                continue
            try:
                pending[i] = s.send(float(r[i]))
            except StopIteration as stop:
                pending[i] = None
                estimate[i] = stop.value
    return t, np.array(estimate)


def vector_reported_count(transcript: QueryTranscript) -> int:
    """Vector queries with at least one axis doing real work."""
    return sum(1 for ph in transcript.phases if any(p not in ("trivial", PAD) for p in ph))


def axis_projection(transcript: QueryTranscript, axis: int) -> list:
    return [q[axis] for q in transcript.queries]


def planted_grid(cfg: MinimaxDConfig) -> list:
    """Product of per-axis planted eps-intervals, as lists of per-axis ``(lo, hi)``."""
    axis = extract_planted_candidates(cfg.axis_config)
    return [list(c) for c in itertools.product(axis, repeat=cfg.d)]


def covering_number_product(axes: Sequence[Sequence[float]], radius: float) -> int:
    """l-infinity cover of a product set: product of the per-axis 1-d covers."""
    return math.prod(covering_number_1d(a, radius) for a in axes)


def audit_multidim_privacy(cfg: MinimaxDConfig, trials: int = 2000, seed: int = 0) -> dict:
    """Per-axis guess-pair adversaries composed over axes, success in l-infinity at ``delta/2``."""
    hits = 0
    for ss in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(ss)
        cell = planted_grid(cfg)[int(rng.integers(cfg.L))]
        truth = [rng.uniform(lo, hi) for lo, hi in cell]
        truth = [x if x > 0.0 else 0.5 * hi for x, (_, hi) in zip(truth, cell)]
        f = SeparableFunction([random_piecewise_convex(rng, minimizer=x) for x in truth])
        t, _ = run_minimax_d(cfg, f.gradient)
        guess = [
            guess_pair_adversary(AdversaryView(axis_projection(t, i), cfg.delta, cfg.axis_budget), cfg.eps, rng)
            for i in range(cfg.d)
        ]
        hits += max(abs(g - x) for g, x in zip(guess, truth)) <= cfg.delta / 2
    lo, hi = wilson_ci(hits, trials)
    slack = privacy_slack(cfg.L, trials)
    return {"rate": hits / trials, "wilson_ci": [lo, hi], "bound": 1.0 / cfg.L, "slack": slack,
            "pass": hi <= 1.0 / cfg.L + slack}


def make_separable(minimizer: Sequence[float], rng: np.random.Generator | None = None) -> SeparableFunction:
    if rng is None:
        return SeparableFunction([make_sandwich_function(x) for x in minimizer])
    return SeparableFunction([random_piecewise_convex(rng, minimizer=x) for x in minimizer])

