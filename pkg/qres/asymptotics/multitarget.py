"""Moments and optimizer for simultaneous search of several targets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from qres.asymptotics.capacity import (
    DEFAULT_GRID_STEP,
    DEFAULT_REFINE_TOL,
    MAXIMIZER_TOL,
    information_slope,
    maximize_scan,
)
from qres.asymptotics.resolution import ThirdOrder, third_order_term
from qres.channels.models import ChannelFamily, matrix_at
from qres.errors import InvalidParameterError, NonUniqueOptimizerError, UndefinedDensityError
from qres.info.density import InfoStats, moments_grid
from qres.info.normal import gaussian_quantile

MAX_TARGETS = 8

Subset = tuple[int, ...]


@dataclass(frozen=True)
class MultiTargetStats:
    """
    Optimizer (p*, t*) of max_p min_t C_[t](p,t)/t together with the moments
    of every conditional density iota_J at p*, for t = 1..k.

    ``subsets[t][J]`` holds the moments for the 0-based subset J of [t]
    hypothesised wrong; J = (0, .., t-1) is the full density iota_[t].
    """

    k: int
    p_star: float
    t_star: int
    subsets: dict[int, dict[Subset, InfoStats]] = field(repr=False)

    def full(self, t: int) -> InfoStats:
        return self.subsets[t][tuple(range(t))]

    @property
    def C(self) -> float:
        return self.full(self.t_star).C

    @property
    def V(self) -> float:
        return self.full(self.t_star).V

    @property
    def T(self) -> float:
        return self.full(self.t_star).T

    @property
    def rate(self) -> float:
        """C_[t*](p*, t*) / t*."""
        return self.C / self.t_star

    def certificate_margin(self) -> float:
        """min over proper nonempty J of C_J/|J| - C_[t*]/t* (positive when certified)."""
        full = tuple(range(self.t_star))
        margins = [
            s.C / len(J) - self.rate
            for J, s in self.subsets[self.t_star].items()
            if J != full
        ]
        return min(margins) if margins else math.inf

    @property
    def certified(self) -> bool:
        return self.certificate_margin() > 0.0


def union_probability(p: float | np.ndarray, t: int) -> float | np.ndarray:
    """Pr{some of t Bernoulli(p) bits is 1}."""
    return 1.0 - (1.0 - np.asarray(p, dtype=float)) ** t


def nonempty_subsets(t: int) -> list[Subset]:
    return [J for size in range(1, t + 1) for J in itertools.combinations(range(t), size)]


def subset_density(
    family: ChannelFamily, p: float, t: int, J: Subset
) -> tuple[np.ndarray, np.ndarray]:
    """
    (values, joint) of iota_J over the 2^t * |Y| outcomes of (x_1..x_t, y).

    iota_J = log P(y | OR x) - log P(y | x outside J); the denominator is the
    response law with the bits in J marginalised out.
    """
    w = matrix_at(family, p).entries
    xs = np.array(list(itertools.product((0, 1), repeat=t)), dtype=int)
    weights = np.prod(np.where(xs == 1, p, 1.0 - p), axis=1)
    z = xs.max(axis=1)
    joint = weights[:, None] * w[z]

    rest = [j for j in range(t) if j not in J]
    conditioned_one = xs[:, rest].any(axis=1) if rest else np.zeros(len(xs), dtype=bool)
    r = float(union_probability(p, len(J)))
    mixture = r * w[1] + (1.0 - r) * w[0]
    denom = np.where(conditioned_one[:, None], w[1][None, :], mixture[None, :])
    numer = w[z]
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.log(numer) - np.log(denom)
    values = np.where((numer > 0.0) & (denom > 0.0), values, -np.inf)
    return values, joint


def subset_moments(family: ChannelFamily, p: float, t: int, J: Subset) -> InfoStats:
    values, joint = subset_density(family, p, t, J)
    used = joint > 0.0
    v = values[used]
    pr = joint[used]
    if not np.all(np.isfinite(v)):
        raise UndefinedDensityError(f"iota_J for J={J} is -inf on a used outcome at p={p}")
    mean = float(np.dot(pr, v))
    centred = v - mean
    return InfoStats(
        C=mean,
        V=max(float(np.dot(pr, centred**2)), 0.0),
        T=float(np.dot(pr, np.abs(centred) ** 3)),
    )


def _ratios(family: ChannelFamily, ps: np.ndarray, k: int) -> np.ndarray:
    """C_[t](p)/t for t = 1..k, shape (k, len(ps)); iota_[t] is iota_{r,p} with r = 1-(1-p)^t."""
    rows = []
    for t in range(1, k + 1):
        mean, _, _ = moments_grid(family, union_probability(ps, t), ps)
        rows.append(mean / t)
    return np.vstack(rows)


def multi_target_optimize(
    family: ChannelFamily,
    k: int,
    grid_step: float = DEFAULT_GRID_STEP,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> MultiTargetStats:
    """Solve max_p min_{t<=k} C_[t](p,t)/t and collect all conditional moments at p*."""
    if not 1 <= k <= MAX_TARGETS:
        raise InvalidParameterError(f"k must lie in [1, {MAX_TARGETS}], got {k}")
    if not 0.0 < grid_step <= 1e-2:
        raise InvalidParameterError(f"grid_step must lie in (0, 1e-2], got {grid_step}")

    ps = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
    curve = _ratios(family, ps, k).min(axis=0)

    def objective(p: float) -> float:
        return float(_ratios(family, np.array([p]), k).min())

    def slope(p: float) -> float:
        t = 1 + int(np.argmin(_ratios(family, np.array([p]), k)[:, 0]))
        r = float(union_probability(p, t))
        dr = t * (1.0 - p) ** (t - 1)
        return information_slope(family, r, p, dp=dr, dq=1.0) / t

    found = maximize_scan(ps, curve, objective, refine_tol, slope=slope)
    p_star = found[0][0]

    at_star = _ratios(family, np.array([p_star]), k)[:, 0]
    order = np.argsort(at_star, kind="stable")
    t_star = 1 + int(order[0])
    if k > 1 and at_star[order[1]] - at_star[order[0]] <= MAXIMIZER_TOL:
        tied = sorted(1 + int(i) for i in np.flatnonzero(at_star - at_star[order[0]] <= MAXIMIZER_TOL))
        raise NonUniqueOptimizerError(
            f"min over t of C_[t]/t is attained by t in {tied} at p*={p_star:.10g}"
        )

    subsets = {
        t: {J: subset_moments(family, p_star, t, J) for J in nonempty_subsets(t)}
        for t in range(1, k + 1)
    }
    stats = MultiTargetStats(k=k, p_star=p_star, t_star=t_star, subsets=subsets)
    logger.debug(
        f"[multitarget] {family.label} k={k} p*={p_star:.10g} t*={t_star} "
        f"rate={stats.rate:.12g} margin={stats.certificate_margin():.3g}"
    )
    return stats


def multi_target_resolution(
    stats: MultiTargetStats,
    n: int,
    d: int,
    eps: float,
    third_order: ThirdOrder | str = ThirdOrder.NONE,
) -> float:
    """(n C_[t*] + sqrt(n V_[t*]) Phi^{-1}(eps) + r(n)) / (d t*)."""
    if n < 1 or d < 1:
        raise InvalidParameterError(f"n and d must be >= 1, got n={n}, d={d}")
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    spread = math.sqrt(n * stats.V) * gaussian_quantile(eps) if stats.V > 0.0 else 0.0
    return (n * stats.C + spread + third_order_term(n, third_order)) / (d * stats.t_star)
