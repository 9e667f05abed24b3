"""Monte Carlo audit of accuracy, eavesdropper success and query counts.

Every trial draws from its own substream ``SeedSequence(seed).spawn(trials)[i]``,
so a report depends only on ``(config, seed, trials)`` and not on how many
worker processes ran it. Reduction is always in trial-index order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Callable, Sequence

import numpy as np
from scipy import stats

from .adversary import (
    AdversaryView,
    covering_set_adversary,
    guess_pair_adversary,
    minimax_candidates,
    proportional_sampling,
    reconstruction_adversary,
)
from .convex_fn import gradient_oracle, random_piecewise_convex
from .dp_prior import MarginalNu, sample_stick_breaking
from .learner_bayes import BayesConfig, bayes_strategy, candidate_points, reconstruct_queries
from .learner_minimax import MinimaxConfig, extract_planted_candidates, run_minimax

MINIMAX_ADVERSARIES = ("guess_pair", "covering_set")
BAYES_ADVERSARIES = ("proportional", "reconstruction")
SLACK_SE = 4.0
Z95 = 1.959963984540054


def wilson_ci(successes: int, n: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def privacy_slack(L: int, n: int, k: float = SLACK_SE) -> float:
    """``k`` binomial standard errors at the target rate ``1/L``."""
    p0 = 1.0 / L
    return k * math.sqrt(p0 * (1 - p0) / n)


def theoretical_bounds(setting: str, params: dict) -> tuple:
    """``(lower, upper)`` query-count bounds.

    minimax: ``2L + log2(delta/eps) - 2`` and, for the upper side,
    ``2L + log2(delta/eps)`` when ``L >= log2(1/delta)``, else ``L + log2(1/eps)``.
    bayes: ``2**-alpha * L * log2(delta/eps)`` and
    ``L log2(delta/eps) + c2 L + log2(1/(delta L))``.
    Parameters are validated by the corresponding config class.
    """
    eps, delta, L = params["eps"], params["delta"], int(params["L"])
    if setting == "minimax":
        MinimaxConfig(eps, delta, L)
        lower = 2 * L + math.log2(delta / eps) - 2
        if L >= math.log2(1.0 / delta) - 1e-12:
            upper = 2 * L + math.log2(delta / eps)
        else:
            upper = L + math.log2(1.0 / eps)
        return lower, upper
    if setting == "bayes":
        cfg = BayesConfig(eps, delta, L, params["alpha"])
        lower = 2.0 ** -cfg.alpha * L * math.log2(delta / eps)
        upper = L * math.log2(delta / eps) + cfg.c2 * L + math.log2(1.0 / (delta * L))
        return lower, upper
    raise ValueError(f"unknown setting {setting!r}")


@dataclass
class AuditReport:
    setting: str
    params: dict
    trials: int
    seed: int
    accuracy_rate: float
    adversary_success: dict
    query_count: dict
    theory: dict
    passed: bool
    gates: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _substreams(seed: int, trials: int) -> list:
    return np.random.SeedSequence(seed).spawn(trials)


def _map_trials(fn: Callable, args: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=max(1, len(args) // (8 * workers))))


def _adversary_summary(successes: dict, n: int, L: int) -> dict:
    out = {}
    slack = privacy_slack(L, n)
    for name, k in successes.items():
        lo, hi = wilson_ci(k, n)
        out[name] = {
            "successes": k,
            "rate": k / n,
            "wilson_ci": [lo, hi],
            "bound": 1.0 / L,
            "slack": slack,
            "pass": hi <= 1.0 / L + slack,
        }
    return out


def _count_summary(counts: Sequence[int]) -> dict:
    return {"min": int(min(counts)), "max": int(max(counts)), "mean": float(np.mean(counts))}


def _write_trials(trial_log: IO | None, records: list):
    if trial_log is None:
        return
    for i, rec in enumerate(records):
        trial_log.write(json.dumps({"trial": i, **rec}, sort_keys=True) + "\n")


# minimax ---------------------------------------------------------------------

def sample_planted_truth(cfg: MinimaxConfig, rng: np.random.Generator) -> float:
    """Uniform over the planted eps-intervals, uniform inside the chosen one, never exactly 0."""
    cands = extract_planted_candidates(cfg)
    s, _ = cands[int(rng.integers(len(cands)))]
    x = rng.uniform(s, s + cfg.eps)
    while x <= 0.0:
        x = rng.uniform(s, s + cfg.eps)
    return x


def sample_uniform_truth(cfg: MinimaxConfig, rng: np.random.Generator) -> float:
    x = rng.uniform(0.0, 1.0)
    while x <= 0.0:
        x = rng.uniform(0.0, 1.0)
    return x


TRUTH_SAMPLERS = {"planted": sample_planted_truth, "uniform": sample_uniform_truth}


def _minimax_trial(args) -> dict:
    cfg, sampler_name, adversaries, ss = args
    rng = np.random.default_rng(ss)
    truth = TRUTH_SAMPLERS[sampler_name](cfg, rng)
    f = random_piecewise_convex(rng, minimizer=truth)
    transcript, estimate = run_minimax(cfg, gradient_oracle(f))
    view = AdversaryView(transcript.adversary_view(), cfg.delta, cfg.L)
    hits = {}
    for name in adversaries:
        if name == "guess_pair":
            guess = guess_pair_adversary(view, cfg.eps, rng)
        elif name == "covering_set":
            cands = minimax_candidates(view, cfg.eps) or list(view.queries)
            guess = covering_set_adversary(cands, cfg.delta / 2, rng)
        elif name == "proportional":
            guess = proportional_sampling(view, rng)
        else:
            raise ValueError(f"unknown minimax adversary {name!r}")
        hits[name] = abs(guess - truth) <= cfg.delta / 2
    return {
        "truth": truth,
        "estimate": estimate,
        "accurate": abs(estimate - truth) <= cfg.eps / 2,
        "count": transcript.reported_count,
        "hits": hits,
    }


def audit_minimax(cfg: MinimaxConfig, trials: int = 10_000, truth_sampler: str = "planted",
                  adversaries: Sequence[str] = MINIMAX_ADVERSARIES, seed: int = 0, workers: int = 1,
                  trial_log: IO | None = None, min_trials: int = 1000) -> AuditReport:
    if trials < min_trials:
        raise ValueError(f"audit needs at least {min_trials} trials, got {trials}")
    if truth_sampler not in TRUTH_SAMPLERS:
        raise ValueError(f"unknown truth sampler {truth_sampler!r}")
    args = [(cfg, truth_sampler, tuple(adversaries), ss) for ss in _substreams(seed, trials)]
    records = _map_trials(_minimax_trial, args, workers)
    _write_trials(trial_log, records)

    lower, upper = theoretical_bounds("minimax", {"eps": cfg.eps, "delta": cfg.delta, "L": cfg.L})
    counts = [r["count"] for r in records]
    accuracy = sum(r["accurate"] for r in records) / trials
    adv = _adversary_summary({a: sum(r["hits"][a] for r in records) for a in adversaries}, trials, cfg.L)
    gates = {
        "accuracy": accuracy == 1.0,
        "privacy": all(v["pass"] for v in adv.values()),
        "count_upper": max(counts) <= upper + 1e-9,
        "count_lower": min(counts) >= lower - 1e-9,
    }
    return AuditReport(
        setting="minimax",
        params={"eps": cfg.eps, "delta": cfg.delta, "L": cfg.L, "truth_sampler": truth_sampler},
        trials=trials, seed=seed, accuracy_rate=accuracy, adversary_success=adv,
        query_count=_count_summary(counts), theory={"lower_bound": lower, "upper_bound": upper},
        passed=all(gates.values()), gates=gates,
    )


# bayes -----------------------------------------------------------------------

def _bayes_trial(args) -> dict:
    cfg, adversaries, check_replay, ss = args
    rng = np.random.default_rng(ss)
    nu = MarginalNu(cfg.alpha)
    f = sample_stick_breaking(cfg.alpha, rng=rng)
    truth = f.minimizer
    run = bayes_strategy(cfg, f.gradient, rng, nu)
    plan = run.plan
    queries = run.transcript.adversary_view()
    view = AdversaryView(queries, cfg.delta, cfg.L, cfg.alpha)
    cands = candidate_points(plan, truth)
    gaps = np.diff(np.sort(cands))
    hits = {}
    for name in adversaries:
        if name == "proportional":
            guess = proportional_sampling(view, rng)
        elif name == "reconstruction":
            guess = reconstruction_adversary(view, cfg.phase1_steps, rng)
        else:
            raise ValueError(f"unknown Bayesian adversary {name!r}")
        hits[name] = abs(guess - truth) <= cfg.delta / 2
    q = np.asarray(queries)
    rec = {
        "truth": truth,
        "estimate": run.estimate,
        "accurate": abs(run.estimate - truth) <= cfg.eps / 2,
        "count": len(queries),
        "hits": hits,
        "min_gap": float(gaps.min()) if len(gaps) else math.inf,
        "j_star": plan.j_star,
        "side": plan.side,
        "cell": int(round(plan.I_u[0] * 2 ** cfg.phase1_steps)),
        "window": int(np.count_nonzero(np.abs(q - truth) <= cfg.delta / 2)),
        "phase_order": run.transcript.phases == sorted(run.transcript.phases),
    }
    if check_replay:
        rec["replay"] = reconstruct_queries(cfg, cands, nu) == list(queries)
    return rec


def _uniformity_tests(records: list, L: int) -> dict:
    """Truth-index uniformity: goodness of fit, and independence from the public phase-1/3 outcome."""
    j = np.array([r["j_star"] for r in records])
    observed = np.bincount(j - 1, minlength=L)
    gof = stats.chisquare(observed)
    keys = sorted({(r["side"], r["cell"]) for r in records})
    table = np.zeros((len(keys), L), dtype=int)
    index = {k: i for i, k in enumerate(keys)}
    for r in records:
        table[index[(r["side"], r["cell"])], r["j_star"] - 1] += 1
    table = table[table.sum(axis=1) > 0]
    if table.shape[0] > 1:
        indep_p = float(stats.chi2_contingency(table)[1])
    else:
        indep_p = 1.0
    return {
        "j_star_counts": observed.tolist(),
        "goodness_of_fit_p": float(gof.pvalue),
        "independence_p": indep_p,
    }


def audit_bayes(cfg: BayesConfig, trials: int = 10_000, adversaries: Sequence[str] = BAYES_ADVERSARIES,
                seed: int = 0, workers: int = 1, trial_log: IO | None = None, check_replay: bool = False,
                significance: float = 1e-3, min_trials: int = 1000) -> AuditReport:
    if trials < min_trials:
        raise ValueError(f"audit needs at least {min_trials} trials, got {trials}")
    args = [(cfg, tuple(adversaries), check_replay, ss) for ss in _substreams(seed, trials)]
    records = _map_trials(_bayes_trial, args, workers)
    _write_trials(trial_log, records)

    L = cfg.L
    lower, upper = theoretical_bounds("bayes", {"eps": cfg.eps, "delta": cfg.delta, "L": L, "alpha": cfg.alpha})
    gate_upper = upper + 3 * L
    counts = np.array([r["count"] for r in records], dtype=float)
    windows = np.array([r["window"] for r in records], dtype=float)
    diff = counts - L * windows
    diff_se = float(diff.std(ddof=1) / math.sqrt(trials))
    accuracy = sum(r["accurate"] for r in records) / trials
    adv = _adversary_summary({a: sum(r["hits"][a] for r in records) for a in adversaries}, trials, L)
    uniform = _uniformity_tests(records, L)
    min_gap = min(r["min_gap"] for r in records)
    extra = {
        "c1_witness": 2.0 ** -cfg.alpha,
        "c2": cfg.c2,
        "H_alpha": cfg.H,
        "h_alpha": cfg.h,
        "phase1_steps": cfg.phase1_steps,
        "min_candidate_gap": min_gap,
        "separated_fraction": sum(r["min_gap"] > cfg.delta for r in records) / trials,
        "proportional_sampling": {
            "mean_queries": float(counts.mean()),
            "mean_window_queries": float(windows.mean()),
            "L_times_mean_window": float(L * windows.mean()),
            "mean_difference": float(diff.mean()),
            "difference_se": diff_se,
        },
        "truth_index": uniform,
    }
    if check_replay:
        extra["replay_fraction"] = sum(r["replay"] for r in records) / trials
    gates = {
        "accuracy": accuracy == 1.0,
        "privacy": all(v["pass"] for v in adv.values()),
        "count_upper": float(counts.max()) <= gate_upper,
        "separation": extra["separated_fraction"] == 1.0,
        "truth_index_uniform": min(uniform["goodness_of_fit_p"], uniform["independence_p"]) > significance,
        "proportional_sampling": float(diff.mean()) >= -SLACK_SE * diff_se,
        "phase_order": all(r["phase_order"] for r in records),
    }
    if check_replay:
        gates["replay"] = extra["replay_fraction"] == 1.0
    return AuditReport(
        setting="bayes",
        params={"eps": cfg.eps, "delta": cfg.delta, "L": L, "alpha": cfg.alpha},
        trials=trials, seed=seed, accuracy_rate=accuracy, adversary_success=adv,
        query_count=_count_summary(counts.astype(int).tolist()),
        theory={"lower_bound": lower, "upper_bound": upper, "gate_upper_bound": gate_upper},
        passed=all(gates.values()), gates=gates, extra=extra,
    )
