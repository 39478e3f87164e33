"""Bound report models."""

from pydantic import BaseModel, Field


class AchievabilityResult(BaseModel):
    """Random-coding upper bound on the excess-resolution probability."""

    eps_upper: float
    clipped: bool = False
    eps_upper_clipped: float
    half_width: float
    term1: float
    term2: float
    p: float
    eta: float
    # Default eta fell outside [0, min(p, 1-p)) and was replaced by half the window
    eta_clamped: bool = False
    continuity: float
    mc_samples: int


class ConverseResult(BaseModel):
    """Upper bound on -log delta over equal-size i.i.d. query laws."""

    neg_log_delta_upper: float
    beta: float
    kappa: float
    level: float
    best_q: float
    max_quantile: float
    q_grid: list[float] = Field(default_factory=list)


class BoundReport(BaseModel):
    """Achievability and converse values for one (family, n, d) point."""

    family: str
    n: int
    d: int
    M: int | None = None
    eps: float | None = None
    achievability: AchievabilityResult | None = None
    converse: ConverseResult | None = None
    notes: list[str] = Field(default_factory=list)
