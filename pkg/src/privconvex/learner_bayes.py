"""Bayesian-private querying strategy under the Dirichlet-process prior.

Four phases:

1. bisect on the prior quantile scale until the remaining interval ``I``
   carries prior mass in ``[2 delta L H, 4 delta L H]``;
2. cut ``I`` into ``L`` pieces of equal prior mass and find the piece
   holding the minimizer;
3. query each piece's prior median and keep the same half (left or right)
   of every piece, chosen by the response at the true piece's median;
4. draw a decoy from the prior restricted to every other kept half, then
   bisect each kept half to eps-accuracy, answering for decoys by their
   sign and asking the oracle only for the true one.

Quantile work happens in ``u = F_nu(x)`` coordinates, where the prior
minimizer is uniform and every phase is an exact dyadic or even split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dp_prior import MarginalNu, H_alpha, h_alpha
from .errors import RegimeError
from .learner_minimax import halvings
from .transcript import QueryTranscript

_REL = 1e-12


@dataclass(frozen=True)
class BayesConfig:
    eps: float
    delta: float
    L: int
    alpha: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise RegimeError(f"privacy level L must be a positive integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if not self.alpha > 0:
            raise RegimeError("alpha must be positive")
        if not self.eps > 0:
            raise RegimeError("eps must be positive")
        if 2 * self.eps > self.delta * (1 + _REL):
            raise RegimeError(f"2*eps <= delta violated: eps={self.eps}, delta={self.delta}")
        if not self.delta < 1.0 / (2 * self.L * self.H):
            raise RegimeError(
                f"delta < 1/(2 L H_alpha) violated: delta={self.delta} >= {1.0 / (2 * self.L * self.H):.6g}"
            )

    @property
    def H(self) -> float:
        return H_alpha(self.alpha)

    @property
    def h(self) -> float:
        return h_alpha(self.alpha)

    @property
    def c2(self) -> float:
        return math.log2(16.0 * self.H / self.h)

    @property
    def phase1_steps(self) -> int:
        """Halvings until the prior mass of ``I`` is at most ``4 delta L H``."""
        target = 4.0 * self.delta * self.L * self.H
        k = 0
        while 2.0 ** -k > target:
            k += 1
        return k

    def query_bound(self) -> float:
        """Per-run count gate: displayed upper bound plus ``3L`` for ceilings."""
        L = self.L
        return (L * math.ceil(math.log2(self.delta / self.eps) - 1e-12) + self.c2 * L
                + math.log2(1.0 / (self.delta * L)) + 3 * L)


@dataclass
class PhasePlan:
    """Everything the strategy decided, in both ``x`` and prior-quantile ``u`` coordinates."""

    I: tuple = None
    I_u: tuple = None
    kappas: list = field(default_factory=list)
    j_star: int = 0
    medians: list = field(default_factory=list)
    side: str = ""
    J: list = field(default_factory=list)
    J_u: list = field(default_factory=list)
    decoys: list = field(default_factory=list)
    phase_counts: dict = field(default_factory=dict)


@dataclass
class BayesRun:
    transcript: QueryTranscript
    estimate: float
    plan: PhasePlan


def _ask(oracle, transcript, q, phase):
    r = oracle(q)
    transcript.record(q, r, phase)
    return r


def phase1_localize(cfg: BayesConfig, nu: MarginalNu, oracle, transcript: QueryTranscript) -> tuple:
    """Posterior-median bisection; returns ``(I, I_u)``."""
    u_lo, u_hi = 0.0, 1.0
    for _ in range(cfg.phase1_steps):
        u_mid = 0.5 * (u_lo + u_hi)
        if _ask(oracle, transcript, nu.quantile(u_mid), "p1") <= 0.0:
            u_lo = u_mid
        else:
            u_hi = u_mid
    return (nu.quantile(u_lo), nu.quantile(u_hi)), (u_lo, u_hi)


def phase2_partition(I_u: tuple, L: int, nu: MarginalNu, oracle, transcript: QueryTranscript) -> tuple:
    """Query the inner ``j/L`` quantiles of ``nu`` restricted to ``I``; returns ``(kappas, j_star)``.

    ``kappas`` holds all ``L + 1`` cut points including the ends of ``I``;
    ``j_star`` is 1-based.
    """
    u_lo, u_hi = I_u
    w = (u_hi - u_lo) / L
    kappas = [nu.quantile(u_lo)]
    n_left = 0
    for j in range(1, L):
        k = nu.quantile(u_lo + j * w)
        kappas.append(k)
        n_left += _ask(oracle, transcript, k, "p2") <= 0.0
    kappas.append(nu.quantile(u_hi))
    return kappas, n_left + 1


def phase3_medians(I_u: tuple, L: int, j_star: int, nu: MarginalNu, oracle,
                   transcript: QueryTranscript) -> tuple:
    """Query every piece's median; returns ``(medians, J, J_u, side)``.

    The kept half is the same for every piece and is decided by the
    response at the true piece's median alone.
    """
    u_lo, u_hi = I_u
    w = (u_hi - u_lo) / L
    medians, responses = [], []
    for j in range(1, L + 1):
        m = nu.quantile(u_lo + (j - 0.5) * w)
        medians.append(m)
        responses.append(_ask(oracle, transcript, m, "p3"))
    side = "left" if responses[j_star - 1] > 0.0 else "right"
    J_u = []
    for j in range(1, L + 1):
        a, b = u_lo + (j - 1) * w, u_lo + j * w
        mid = u_lo + (j - 0.5) * w
        J_u.append((a, mid) if side == "left" else (mid, b))
    J = [(nu.quantile(a), nu.quantile(b)) for a, b in J_u]
    return medians, J, J_u, side


def _bisect_interval(interval, eps, respond, transcript):
    a, b = interval
    for _ in range(halvings(b - a, eps)):
        q = 0.5 * (a + b)
        r = respond(q)
        transcript.record(q, r, "p4")
        if r <= 0.0:
            a = q
        else:
            b = q
    return 0.5 * (a + b)


def phase4_decoy_search(J: list, J_u: list, j_star: int, nu: MarginalNu, eps: float, oracle,
                        rng: np.random.Generator, transcript: QueryTranscript) -> tuple:
    """Sample decoys and bisect every kept half; returns ``(decoys, estimate)``.

    ``decoys[j_star - 1]`` is ``None`` (the truth's slot). Decoys are drawn
    by inverse CDF before any phase-4 query is made.
    """
    decoys = []
    for j, (a, b) in enumerate(J_u, start=1):
        decoys.append(None if j == j_star else nu.quantile(rng.uniform(a, b)))
    estimate = None
    for j, interval in enumerate(J, start=1):
        if j == j_star:
            estimate = _bisect_interval(interval, eps, oracle, transcript)
        else:
            x = decoys[j - 1]
            _bisect_interval(interval, eps, lambda q, x=x: -1.0 if x > q else 1.0, transcript)
    return decoys, estimate


def bayes_strategy(cfg: BayesConfig, oracle: Callable[[float], float], rng: np.random.Generator,
                   nu: MarginalNu | None = None, seed: int | None = None) -> BayesRun:
    nu = nu or MarginalNu(cfg.alpha)
    t = QueryTranscript(seed=seed)
    plan = PhasePlan()
    plan.I, plan.I_u = phase1_localize(cfg, nu, oracle, t)
    n1 = len(t)
    plan.kappas, plan.j_star = phase2_partition(plan.I_u, cfg.L, nu, oracle, t)
    n2 = len(t)
    plan.medians, plan.J, plan.J_u, plan.side = phase3_medians(plan.I_u, cfg.L, plan.j_star, nu, oracle, t)
    n3 = len(t)
    plan.decoys, estimate = phase4_decoy_search(plan.J, plan.J_u, plan.j_star, nu, cfg.eps, oracle, rng, t)
    plan.phase_counts = {"p1": n1, "p2": n2 - n1, "p3": n3 - n2, "p4": len(t) - n3}
    return BayesRun(t, estimate, plan)


def run_bayes(cfg: BayesConfig, oracle: Callable[[float], float], rng: np.random.Generator,
              nu: MarginalNu | None = None, seed: int | None = None) -> tuple:
    """Run all four phases; returns ``(transcript, estimate)``."""
    run = bayes_strategy(cfg, oracle, rng, nu, seed)
    return run.transcript, run.estimate


def candidate_points(plan: PhasePlan, truth: float) -> list:
    """The ``L`` candidates ``X_1..X_L`` with the truth in its slot."""
    return [truth if x is None else x for x in plan.decoys]


def reconstruct_queries(cfg: BayesConfig, candidates: list, nu: MarginalNu | None = None) -> list:
    """Rebuild the full query sequence from the candidates ``X_1..X_L`` alone.

    Phases 1-3 only depend on which dyadic cell and which half the
    candidates occupy, and phase 4 bisects towards each candidate.
    """
    nu = nu or MarginalNu(cfg.alpha)
    L = cfg.L
    x1 = candidates[0]
    queries = []
    u_lo, u_hi = 0.0, 1.0
    for _ in range(cfg.phase1_steps):
        u_mid = 0.5 * (u_lo + u_hi)
        q = nu.quantile(u_mid)
        queries.append(q)
        if x1 > q:
            u_lo = u_mid
        else:
            u_hi = u_mid
    w = (u_hi - u_lo) / L
    queries += [nu.quantile(u_lo + j * w) for j in range(1, L)]
    medians = [nu.quantile(u_lo + (j - 0.5) * w) for j in range(1, L + 1)]
    queries += medians
    left = x1 < medians[0]
    for j, x in enumerate(candidates, start=1):
        a_u, b_u = u_lo + (j - 1) * w, u_lo + j * w
        mid = u_lo + (j - 0.5) * w
        a, b = (nu.quantile(a_u), nu.quantile(mid)) if left else (nu.quantile(mid), nu.quantile(b_u))
        for _ in range(halvings(b - a, cfg.eps)):
            q = 0.5 * (a + b)
            queries.append(q)
            if x > q:
                a = q
            else:
                b = q
    return queries
