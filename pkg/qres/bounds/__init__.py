"""Finite-length achievability and converse bounds."""

from qres.bounds.achievability import (
    achievability_bound,
    default_eta,
    pairwise_error_probability,
)
from qres.bounds.converse import converse_bound, converse_quantile, default_q_grid
from qres.bounds.types import AchievabilityResult, BoundReport, ConverseResult

__all__ = [
    "AchievabilityResult",
    "BoundReport",
    "ConverseResult",
    "achievability_bound",
    "converse_bound",
    "converse_quantile",
    "default_eta",
    "default_q_grid",
    "pairwise_error_probability",
]
