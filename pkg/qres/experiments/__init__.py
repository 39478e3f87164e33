"""Experiment recipes, runner and result files."""

from qres.experiments.recipes import (
    AdaptiveRecipe,
    adaptive_recipe,
    multitarget_recipe_M,
    nonadaptive_recipe_M,
    phase_transition_log_M,
    separate_recipe_M,
)
from qres.experiments.runner import RunResult, run

__all__ = [
    "AdaptiveRecipe",
    "RunResult",
    "adaptive_recipe",
    "multitarget_recipe_M",
    "nonadaptive_recipe_M",
    "phase_transition_log_M",
    "run",
    "separate_recipe_M",
]
