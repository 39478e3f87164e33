"""Configuration schema for qres experiments."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

try:
    from pydantic_settings import BaseSettings
except ImportError:  # pragma: no cover - local fallback when optional dep is absent
    from pydantic import BaseModel as BaseSettings

from qres.asymptotics.resolution import ThirdOrder
from qres.info.sums import DEFAULT_MERGE_TOL, DEFAULT_SUPPORT_CAP
from qres.search.space import DEFAULT_CELL_CAP, DecoderMode


class Command(str, Enum):
    """Experiment kinds."""

    CAPACITY_SWEEP = "capacity-sweep"
    RATE_COMPARE = "rate-compare"
    GAIN = "gain"
    PHASE_TRANSITION = "phase-transition"
    SIM_NONADAPTIVE = "sim-nonadaptive"
    SIM_MULTITARGET = "sim-multitarget"
    SIM_ADAPTIVE = "sim-adaptive"
    BOUNDS = "bounds"
    BERRY_ESSEEN = "berry-esseen"
    ADAPTIVE_COMPARE = "adaptive-compare"


class Units(str, Enum):
    NATS = "nats"
    BITS = "bits"


# Commands whose recipe subtracts 1/2 log n when choosing M
_MINUS_HALF_LOG_COMMANDS = {Command.SIM_MULTITARGET, Command.BOUNDS}


class ExperimentSpec(BaseModel):
    """Every parameter of one experiment run, in nats unless ``units`` says otherwise."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    command: Command
    family: str
    # Family parameters swept by capacity-sweep / rate-compare / gain
    params: list[float] | None = None
    n: list[int] | None = None
    d: int = Field(default=1, ge=1)
    k: int = Field(default=2, ge=1)
    eps: float = Field(default=0.1, gt=0.0, lt=1.0)
    eps_grid: list[float] | None = None
    trials: int = Field(default=1000, ge=1)
    seed: int | None = None
    output: str | None = None
    units: Units = Units.NATS
    threads: int | None = Field(default=None, ge=1)
    third_order: ThirdOrder | None = None
    # Multi-target threshold; None means 1/2 log n at each n
    gamma: float | None = None
    decoder_mode: DecoderMode = DecoderMode.AUTO
    freeze_codebook: bool = False
    separate: bool = False
    grid_step: float = Field(default=1e-4, gt=0.0, le=1e-3)
    refine_tol: float = Field(default=1e-10, gt=0.0)
    sweep_step: float = Field(default=0.01, gt=0.0, le=0.5)
    merge_tol: float = Field(default=DEFAULT_MERGE_TOL, gt=0.0)
    mc_samples: int = Field(default=10_000, ge=1)
    # Explicit cells per axis, overriding the recipe
    m: int | None = Field(default=None, ge=2)
    p: float | None = Field(default=None, gt=0.0, lt=1.0)
    eta: float | None = Field(default=None, ge=0.0)
    q_grid: list[float] | None = None
    # phase-transition: log M as multiples of nC/d
    rate_grid: list[float] | None = None
    simulate: bool = False
    eps_split: bool = False
    exact_c1: bool = False
    max_steps: int = Field(default=10_000, ge=1)
    slack: float = Field(default=0.1, ge=0.0)
    prune: bool = False
    histogram: bool = False
    cell_cap: int = Field(default=DEFAULT_CELL_CAP, ge=1)
    support_cap: int = Field(default=DEFAULT_SUPPORT_CAP, ge=1)

    @model_validator(mode="after")
    def _fill_command_defaults(self) -> ExperimentSpec:
        if self.third_order is None:
            self.third_order = (
                ThirdOrder.MINUS_HALF_LOG
                if self.command in _MINUS_HALF_LOG_COMMANDS
                else ThirdOrder.NONE
            )
        if self.eps_grid is not None and any(not 0.0 < v < 1.0 for v in self.eps_grid):
            raise ValueError("eps_grid entries must lie in (0, 1)")
        if self.n is not None and any(v < 1 for v in self.n):
            raise ValueError("n entries must be positive")
        return self


class Settings(BaseSettings):
    """Process-level defaults read from QRES_* environment variables."""

    seed: int | None = None
    threads: int = 1
    log_level: str = "WARNING"
    output_dir: str = "results"
    cell_cap: int = DEFAULT_CELL_CAP
    support_cap: int = DEFAULT_SUPPORT_CAP

    model_config = ConfigDict(
        env_prefix="QRES_",
        env_nested_delimiter="__",
        extra="ignore",
    )
