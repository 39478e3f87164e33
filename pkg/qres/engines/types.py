"""Monte Carlo result types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qres.info.normal import gaussian_quantile

WILSON_Z = gaussian_quantile(0.975)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval as (centre, half-width)."""
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return centre, half


@dataclass
class TrialOutcome:
    """Result of one simulated search."""

    excess: bool
    decode_error: bool
    collision: bool = False
    # Adaptive runs only
    tau: int = 0
    censored: bool = False
    skipped: bool = False
    # exp(score of a wrong cell - score of the true cell) at the stopping time
    competitor_ratio: float = 0.0
    # Multi-target runs only: no tuple accepted, or fewer cells than distinct targets
    empty: bool = False
    partial: bool = False


@dataclass
class TrialStats:
    """Aggregated excess-resolution and decode-error counts."""

    trials: int
    excess_resolution_count: int
    decode_error_count: int
    resolution_delta: float
    collisions: int = 0
    empty_decodes: int = 0
    partial_decodes: int = 0

    @property
    def empirical_rate(self) -> float:
        return self.excess_resolution_count / self.trials if self.trials else 0.0

    @property
    def half_width(self) -> float:
        return wilson_interval(self.excess_resolution_count, self.trials)[1]

    @property
    def decode_error_rate(self) -> float:
        return self.decode_error_count / self.trials if self.trials else 0.0

    @property
    def decode_error_half_width(self) -> float:
        return wilson_interval(self.decode_error_count, self.trials)[1]

    @classmethod
    def from_outcomes(cls, outcomes: list[TrialOutcome], M: int) -> TrialStats:
        return cls(
            trials=len(outcomes),
            excess_resolution_count=sum(o.excess for o in outcomes),
            decode_error_count=sum(o.decode_error for o in outcomes),
            resolution_delta=1.0 / M,
            collisions=sum(o.collision for o in outcomes),
            empty_decodes=sum(o.empty for o in outcomes),
            partial_decodes=sum(o.partial for o in outcomes),
        )


@dataclass
class AdaptiveRunStats:
    """
    Stopping times and error counts of adaptive runs.

    ``stats`` and ``stopping_times`` describe the plain procedure; when the
    split wrapper is on, ``split`` holds the counts with skipped trials
    scored as failures at tau = 0.
    """

    stats: TrialStats
    stopping_times: np.ndarray = field(repr=False)
    censored_count: int
    a0: float
    lam: float
    c1: float
    # (lambda + a0) / C1
    bound_l: float
    # Mean over trials of exp(score_competitor - score_true) at tau, and its standard error
    martingale_mean: float = 0.0
    martingale_se: float = 0.0
    split: TrialStats | None = None
    split_mean_tau: float | None = None
    skipped_count: int = 0

    @property
    def trials(self) -> int:
        return self.stats.trials

    @property
    def mean_tau(self) -> float:
        return float(np.mean(self.stopping_times)) if self.stopping_times.size else 0.0

    @property
    def var_tau(self) -> float:
        return float(np.var(self.stopping_times, ddof=1)) if self.stopping_times.size > 1 else 0.0

    @property
    def std_tau(self) -> float:
        return math.sqrt(self.var_tau)
