"""Learner-private convex optimization with first-order feedback."""

from .adversary import (
    AdversaryView,
    covering_number_1d,
    covering_set_adversary,
    guess_pair_adversary,
    proportional_sampling,
    reconstruction_adversary,
)
from .audit import AuditReport, audit_bayes, audit_minimax, theoretical_bounds, wilson_ci
from .convex_fn import (
    PiecewiseLinearConvex,
    ResistingOracleState,
    eval_subgradient,
    gradient_oracle,
    make_sandwich_function,
    random_piecewise_convex,
    resisting_count,
    resisting_respond,
)
from .dp_prior import (
    DPFunctionSample,
    MarginalNu,
    check_dp_marginals,
    dp_cdf,
    dp_gradient,
    nu_cdf,
    nu_quantile,
    sample_stick_breaking,
    verify_lemma3,
)
from .errors import BudgetExceeded, DomainError, InfeasibleError, NumericalError, RegimeError
from .learner_bayes import BayesConfig, BayesRun, PhasePlan, bayes_strategy, run_bayes
from .learner_minimax import MinimaxConfig, run_minimax
from .multidim import MinimaxDConfig, SeparableFunction, covering_number_product, run_minimax_d
from .special import regularized_incomplete_beta
from .transcript import QueryTranscript

__version__ = "0.1.0"
