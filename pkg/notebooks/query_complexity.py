"""
What privacy costs in queries
=============================

Plain bisection needs about log2(1/eps) queries. Private strategies pay
extra, growing with the privacy level L. This script tabulates the
minimax strategy's exact counts against the displayed bounds, then the
Bayesian strategy's spread of counts.

Run with ``python3 notebooks/query_complexity.py``.
"""

# %%
import math

import numpy as np

from privconvex import BayesConfig, MinimaxConfig, bayes_strategy, sample_stick_breaking
from privconvex.audit import theoretical_bounds
from privconvex.learner_minimax import expected_query_count

eps, delta = 2**-10, 2**-6

# %%
# Minimax counts are fixed in advance: they do not depend on the truth.
print(" L  count  lower  upper")
for L in (1, 2, 4, 8, 16):
    if delta > 1 / L:
        continue
    cfg = MinimaxConfig(eps, delta, L)
    lo, hi = theoretical_bounds("minimax", {"eps": eps, "delta": delta, "L": L})
    print(f"{L:2d}  {expected_query_count(cfg):5d}  {lo:5.1f}  {hi:5.1f}")

# %%
# Each halving of eps adds a single query once L is fixed.
print([expected_query_count(MinimaxConfig(2.0 ** -k, delta, 8)) for k in range(8, 17)])

# %%
# Bayesian counts vary with the draw; compare with bisection's log2(1/eps).
rng = np.random.default_rng(11)
for L in (2, 4):
    cfg = BayesConfig(2**-12, 2**-8, L, 1.0)
    counts = [len(bayes_strategy(cfg, sample_stick_breaking(1.0, rng=rng).gradient, rng).transcript)
              for _ in range(300)]
    lo, hi = theoretical_bounds("bayes", {"eps": cfg.eps, "delta": cfg.delta, "L": L, "alpha": 1.0})
    print(f"L={L}: counts {min(counts)}..{max(counts)} (mean {np.mean(counts):.1f}), "
          f"bisection {math.log2(1 / cfg.eps):.0f}, bound {hi:.1f}")
