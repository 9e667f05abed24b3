"""
Privacy on average: a random convex function
=============================================

Here the truth is random. A Dirichlet-process draw F gives the gradient
``gamma * (2 F(x) - 1)``, so the minimizer is the median of F. Because the
eavesdropper only needs to be fooled on average over that prior, the learner
can plant decoys drawn from the prior itself instead of paying for a full
grid of guesses.

Run with ``python3 notebooks/bayes_prior.py``.
"""

# %%
import numpy as np

from privconvex import BayesConfig, MarginalNu, bayes_strategy, sample_stick_breaking
from privconvex.dp_prior import H_alpha, h_alpha
from privconvex.audit import audit_bayes

rng = np.random.default_rng(7)
alpha = 0.5

# %%
# The minimizer's law nu has a density pinned between two constants.
nu = MarginalNu(alpha)
for t in (0.1, 0.25, 0.5, 0.75, 0.9):
    print(f"nu([0, {t}]) = {nu.cdf(t):.4f}")
print(f"density bounds for alpha={alpha}: [{h_alpha(alpha):.4f}, {H_alpha(alpha):.4f}]")

# %%
# A few prior draws: the median jumps around, and one stick often dominates.
for _ in range(4):
    f = sample_stick_breaking(alpha, rng=rng)
    print(f"minimizer {f.minimizer:.4f}, largest stick {f.largest_stick:.3f}, atoms {len(f.weights)}")

# %%
# One run, phase by phase: localize, cut into L equal-mass pieces, take
# medians, then search each kept half, for real in the truth's piece and
# against a decoy everywhere else.
cfg = BayesConfig(eps=2**-12, delta=2**-8, L=2, alpha=alpha)
f = sample_stick_breaking(alpha, rng=rng)
run = bayes_strategy(cfg, f.gradient, rng)
print(f"truth {f.minimizer:.6f}, estimate {run.estimate:.6f}, queries {len(run.transcript)}")
print("phase counts", run.plan.phase_counts, "kept side", run.plan.side)
print("candidates", [f"{x:.4f}" if x is not None else "truth" for x in run.plan.decoys])

# %%
# Audit: the reconstruction adversary, which knows the phase layout, still
# only lands near the truth about 1/L of the time.
report = audit_bayes(cfg, trials=2000, seed=3)
for name, row in report.adversary_success.items():
    print(f"{name:>14s}: {row['rate']:.3f}  (target {row['bound']:.3f})")
print("gates", report.gates)

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    ts = np.linspace(0.0, 1.0, 201)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ts, [nu.cdf(t) for t in ts], label="nu CDF")
    ax.plot(ts, ts, "--", color="grey", label="uniform")
    ax.legend()
    fig.tight_layout()
    fig.savefig("nu_cdf.png", dpi=120)
    print("wrote nu_cdf.png")
