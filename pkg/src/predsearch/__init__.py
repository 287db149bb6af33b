"""Static predecessor search: tabulation, tuned van Emde Boas, packed B-trees,
signature-driven reductions, and an evaluator for the optimal time/space trade-off."""

from .core import NEG_INF, BudgetError, BuildError, IntegrityError, ParameterError, QueryStats
from .oracle import KeySet, colored_pred, exhaustive_equiv, pred_sorted, sampled_equiv
from .strategy import BuildConfig, Structure, build, plan
from .tradeoff import TradeoffParams, branches, lg_paper, optimal

__all__ = [
    "NEG_INF", "BudgetError", "BuildError", "IntegrityError", "ParameterError", "QueryStats",
    "KeySet", "colored_pred", "exhaustive_equiv", "pred_sorted", "sampled_equiv",
    "BuildConfig", "Structure", "build", "plan",
    "TradeoffParams", "branches", "lg_paper", "optimal",
]
