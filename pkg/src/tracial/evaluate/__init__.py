"""Semantic engine: pointwise evaluation, heuristic search, certified intervals."""
from .certify import DEFAULT_CAP, certify
from .enclosure import enclose
from .pointwise import EvaluationError, batch_qf, batch_term, eval_qf, eval_term
from .result import BudgetExceeded, CertificationError, CertifiedValue, DimensionCapError
from .search import optimize

__all__ = [
    "certify", "optimize", "enclose", "eval_term", "eval_qf", "batch_qf", "batch_term",
    "CertifiedValue", "CertificationError", "DimensionCapError", "BudgetExceeded",
    "EvaluationError", "DEFAULT_CAP",
]
