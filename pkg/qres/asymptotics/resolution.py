"""Second-order resolution approximations and adaptivity comparisons."""

from __future__ import annotations

import math
from enum import Enum

from qres.asymptotics.capacity import capacity, dispersion_for_eps, mi_capacity
from qres.channels.models import ChannelFamily, FamilyKind
from qres.errors import InvalidParameterError
from qres.info.normal import gaussian_cdf, gaussian_quantile


class ThirdOrder(str, Enum):
    """Choice of the O(log n) remainder."""

    NONE = "none"
    MINUS_HALF_LOG = "minusHalfLog"
    PLUS_LOG = "plusLog"


def third_order_term(n: int, third_order: ThirdOrder | str) -> float:
    """r(n) in {0, -1/2 log n, +log n}."""
    mode = ThirdOrder(third_order)
    if mode is ThirdOrder.MINUS_HALF_LOG:
        return -0.5 * math.log(n)
    if mode is ThirdOrder.PLUS_LOG:
        return math.log(n)
    return 0.0


def _check_common(n: int, d: int, eps: float) -> None:
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")


def second_order_resolution(
    C: float,
    V: float,
    n: int,
    d: int,
    eps: float,
    third_order: ThirdOrder | str = ThirdOrder.NONE,
) -> float:
    """-log delta ~ (nC + sqrt(nV) Phi^{-1}(eps) + r(n)) / d."""
    _check_common(n, d, eps)
    if V < 0.0:
        raise InvalidParameterError(f"dispersion must be non-negative, got {V}")
    spread = math.sqrt(n * V) * gaussian_quantile(eps) if V > 0.0 else 0.0
    return (n * C + spread + third_order_term(n, third_order)) / d


def separate_search_resolution(C: float, V_eps_over_d: float, n: int, d: int, eps: float) -> float:
    """Each of d dimensions searched alone with n/d queries and tolerance eps/d."""
    _check_common(n, d, eps)
    if d < 2:
        raise InvalidParameterError(f"separate search needs d >= 2, got {d}")
    spread = math.sqrt(n * V_eps_over_d / d) * gaussian_quantile(eps / d) if V_eps_over_d > 0 else 0.0
    return n * C / d + spread


def adaptive_resolution_bound(C: float, mean_queries: float, d: int, eps: float) -> float:
    """l C / (d (1 - eps)) for l = ``mean_queries``, the O(log l) term omitted."""
    if mean_queries <= 0:
        raise InvalidParameterError(f"mean number of queries must be positive, got {mean_queries}")
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    if not 0.0 <= eps < 1.0:
        raise InvalidParameterError(f"eps must lie in [0, 1), got {eps}")
    return mean_queries * C / (d * (1.0 - eps))


def adaptivity_gain_lower(C: float, V_eps: float, n: int, d: int, eps: float) -> float:
    """
    Lower bound on the log-ratio of non-adaptive to adaptive resolution,
    (nC eps/(1-eps) - sqrt(n V_eps) Phi^{-1}(eps)) / d.
    """
    _check_common(n, d, eps)
    spread = math.sqrt(n * V_eps) * gaussian_quantile(eps) if V_eps > 0.0 else 0.0
    return (n * C * eps / (1.0 - eps) - spread) / d


def pm_asymptotic_rate(family: ChannelFamily) -> float:
    """
    Asymptotic decay rate reached by sorted posterior matching: the capacity
    of the same family with its noise parameter set to zero.
    """
    if family.kind is FamilyKind.CONSTANT:
        raise InvalidParameterError("posterior matching rate needs a parametric family")
    return capacity(family.with_parameter(0.0)).C


def mi_counterpart(
    family: ChannelFamily,
    n: int,
    d: int,
    eps: float,
    third_order: ThirdOrder | str = ThirdOrder.NONE,
) -> float:
    """Second-order -log delta for the measurement-independent version of ``family``."""
    result = mi_capacity(family)
    return second_order_resolution(
        result.C, dispersion_for_eps(result, eps), n, d, eps, third_order
    )


def adaptive_mi_resolution(family: ChannelFamily, mean_queries: float, d: int, eps: float) -> float:
    """Adaptive bound l C_mi / (d (1 - eps)) for the measurement-independent channel."""
    return adaptive_resolution_bound(mi_capacity(family).C, mean_queries, d, eps)


def phase_transition_probability(C: float, V: float, n: int, d: int, log_M: float) -> float:
    """Normal approximation Phi((d log M - nC) / sqrt(nV)) of the excess-resolution probability."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    gap = d * log_M - n * C
    if V <= 0.0:
        return 1.0 if gap > 0.0 else 0.0
    return gaussian_cdf(gap / math.sqrt(n * V))
