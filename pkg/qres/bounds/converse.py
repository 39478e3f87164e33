"""Converse bound on the achievable resolution."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from loguru import logger

from qres.asymptotics.capacity import capacity
from qres.bounds.types import ConverseResult
from qres.channels.models import ChannelFamily, matrix_at
from qres.errors import InvalidParameterError
from qres.info.density import density_table
from qres.info.sums import DEFAULT_MERGE_TOL, DEFAULT_SUPPORT_CAP, quantile, sum_distribution


def default_q_grid(family: ChannelFamily, points: int = 51) -> list[float]:
    """Capacity maximizers together with the interior of an even grid."""
    grid = np.linspace(0.0, 1.0, points)[1:-1]
    return sorted(set(capacity(family).maximizers) | {float(q) for q in grid})


def converse_quantile(
    family: ChannelFamily,
    n: int,
    q: float,
    level: float,
    merge_tol: float = DEFAULT_MERGE_TOL,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """sup{t : Pr{sum_i iota_{q,q}(X_i;Y_i) <= t} <= level} for n i.i.d. queries of size q."""
    table = density_table(q, matrix_at(family, q))
    return quantile(sum_distribution(table, n, merge_tol, support_cap), level)


def converse_bound(
    family: ChannelFamily,
    n: int,
    d: int,
    eps: float,
    q_grid: Sequence[float] | None = None,
    beta: float | None = None,
    kappa: float | None = None,
    merge_tol: float = DEFAULT_MERGE_TOL,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> ConverseResult:
    """
    (-d log beta - log kappa + max_q quantile_q(eps + 2 d beta + kappa)) / d,
    with d beta = kappa = 1/sqrt(n) unless given.
    """
    if n < 1 or d < 1:
        raise InvalidParameterError(f"need n, d >= 1, got n={n}, d={d}")
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    beta = 1.0 / (d * math.sqrt(n)) if beta is None else beta
    kappa = 1.0 / math.sqrt(n) if kappa is None else kappa
    if beta <= 0.0 or kappa <= 0.0:
        raise InvalidParameterError("beta and kappa must be positive")
    level = eps + 2.0 * d * beta + kappa
    if level >= 1.0:
        raise InvalidParameterError(
            f"quantile level eps + 2 d beta + kappa = {level:.4g} must stay below 1"
        )
    grid = list(q_grid) if q_grid is not None else default_q_grid(family)
    if not grid:
        raise InvalidParameterError("q grid is empty")

    best_q, best = grid[0], -math.inf
    for q in grid:
        value = converse_quantile(family, n, q, level, merge_tol, support_cap)
        logger.debug(f"[bounds] converse q={q:.6g} quantile={value:.8g}")
        if value > best:
            best_q, best = q, value

    bound = (-d * math.log(beta) - math.log(kappa) + best) / d
    logger.info(f"[bounds] converse n={n} d={d} eps={eps} -log delta <= {bound:.6g} at q={best_q:.4g}")
    return ConverseResult(
        neg_log_delta_upper=bound,
        beta=beta,
        kappa=kappa,
        level=level,
        best_q=best_q,
        max_quantile=best,
        q_grid=[float(q) for q in grid],
    )
