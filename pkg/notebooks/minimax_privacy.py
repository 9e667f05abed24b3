"""
Hiding a minimizer from an eavesdropper
=======================================

A learner finds the minimizer of a convex function on [0, 1] by asking for
subgradients. An eavesdropper sees every query location but none of the
answers. This walk-through shows how the minimax strategy keeps the
eavesdropper's odds of landing within delta/2 of the truth down to 1/L.

Run with ``python3 notebooks/minimax_privacy.py``; figures need matplotlib.
"""

# %%
# Setup: accuracy eps, privacy radius delta, privacy level L.
import numpy as np

from privconvex import MinimaxConfig, gradient_oracle, random_piecewise_convex, run_minimax
from privconvex.adversary import AdversaryView, guess_pair_adversary
from privconvex.audit import audit_minimax
from privconvex.learner_minimax import extract_planted_candidates

cfg = MinimaxConfig(eps=2**-10, delta=2**-6, L=4)
rng = np.random.default_rng(0)

# %%
# One run. Every guess is a pair of queries eps apart; exactly one of the
# L guesses contains the truth, and the learner is told which by the signs.
truth = 0.3
f = random_piecewise_convex(rng, minimizer=truth)
transcript, estimate = run_minimax(cfg, gradient_oracle(f))
print(f"truth {truth}, estimate {estimate:.6f}, queries {transcript.reported_count}")
for q, phase in zip(transcript.queries, transcript.phases):
    print(f"  {phase:>7s}  {q:.6f}")

# %%
# The planted candidates: any truth inside one of these eps-intervals
# produces the very same query sequence.
cands = extract_planted_candidates(cfg)
views = set()
for lo, hi in cands:
    x = rng.uniform(lo, hi) or hi / 2
    t, _ = run_minimax(cfg, gradient_oracle(random_piecewise_convex(rng, minimizer=x)))
    views.add(t.adversary_view())
print(f"{len(cands)} planted truths, {len(views)} distinct transcript(s)")

# %%
# The eavesdropper can spot the guess pairs but not which one holds the truth.
view = AdversaryView(transcript.adversary_view(), cfg.delta, cfg.L)
print("guess-pair adversary picks", guess_pair_adversary(view, cfg.eps, rng))

# %%
# Monte Carlo audit: success rates should hover around 1/L.
report = audit_minimax(cfg, trials=4000, seed=1)
for name, row in report.adversary_success.items():
    print(f"{name:>13s}: {row['rate']:.3f}  (Wilson upper {row['wilson_ci'][1]:.3f}, target {row['bound']:.3f})")
print("all gates pass:", report.passed)

# %%
# Picture: query locations in submission order, planted intervals shaded.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 3))
    for lo, hi in cands:
        ax.axvspan(lo, hi + cfg.delta / 4, color="tab:orange", alpha=0.3)
    ax.plot(transcript.queries, range(len(transcript)), "o-", ms=4)
    ax.set_xlabel("query location")
    ax.set_ylabel("query index")
    fig.tight_layout()
    fig.savefig("minimax_queries.png", dpi=120)
    print("wrote minimax_queries.png")
