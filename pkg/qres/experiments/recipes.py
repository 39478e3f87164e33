"""Choices of M and of the stopping threshold used by the experiment commands."""

from __future__ import annotations

import math
from typing import NamedTuple

from qres.asymptotics.multitarget import MultiTargetStats, multi_target_resolution
from qres.asymptotics.resolution import (
    ThirdOrder,
    second_order_resolution,
    separate_search_resolution,
)
from qres.errors import InvalidParameterError
from qres.search.space import cells_from_log


def nonadaptive_recipe_M(
    C: float,
    V: float,
    n: int,
    d: int,
    eps: float,
    third_order: ThirdOrder | str = ThirdOrder.NONE,
) -> int:
    """M with log M = (nC + sqrt(nV) Phi^{-1}(eps) + r(n)) / d."""
    return cells_from_log(second_order_resolution(C, V, n, d, eps, third_order))


def separate_recipe_M(C: float, V_eps_over_d: float, n: int, d: int, eps: float) -> int:
    return cells_from_log(separate_search_resolution(C, V_eps_over_d, n, d, eps))


def multitarget_recipe_M(
    stats: MultiTargetStats,
    n: int,
    d: int,
    eps: float,
    third_order: ThirdOrder | str = ThirdOrder.MINUS_HALF_LOG,
) -> int:
    """M with log M = (n C_[t*] + sqrt(n V_[t*]) Phi^{-1}(eps) + r(n)) / (d t*)."""
    return cells_from_log(multi_target_resolution(stats, n, d, eps, third_order))


class AdaptiveRecipe(NamedTuple):
    target_queries: float
    log_M: float
    M: int
    lam: float


def adaptive_recipe(n: int, C: float, a0: float, eps: float, d: int = 1) -> AdaptiveRecipe:
    """
    Parameters targeting an average of n queries at tolerance eps:
    l' = n / (1 - eps), d log M = nC / (1 - eps) - log n and the stopping
    threshold lambda = l' C - a0 of :func:`qres.engines.choose_lambda`.

    By Wald's identity the plain procedure averages at most about l' queries;
    the eps-split wrapper brings the average down to about n.
    """
    if n < 2:
        raise InvalidParameterError(f"adaptive recipe needs n >= 2, got {n}")
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    if not 0.0 <= eps < 1.0:
        raise InvalidParameterError(f"eps must lie in [0, 1), got {eps}")
    target_queries = n / (1.0 - eps)
    log_M = (n * C / (1.0 - eps) - math.log(n)) / d
    M = cells_from_log(log_M)
    lam = target_queries * C - a0
    if not lam > 0.0:
        raise InvalidParameterError(f"recipe gives a non-positive threshold {lam:.4g} at n={n}")
    return AdaptiveRecipe(target_queries=target_queries, log_M=log_M, M=M, lam=lam)


def phase_transition_log_M(C: float, n: int, d: int, multiplier: float) -> float:
    """log M at ``multiplier`` times the critical rate nC/d."""
    if multiplier <= 0.0:
        raise InvalidParameterError(f"rate multiplier must be positive, got {multiplier}")
    return multiplier * n * C / d
