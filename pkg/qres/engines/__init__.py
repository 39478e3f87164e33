"""Monte Carlo engines for the non-adaptive and adaptive query procedures."""

from qres.engines.adaptive import (
    AdaptiveConfig,
    StoppingBoundReport,
    choose_lambda,
    run_adaptive,
    verify_stopping_bounds,
)
from qres.engines.multitarget import run_multi_target
from qres.engines.nonadaptive import run_separate_search, run_single_target
from qres.engines.types import AdaptiveRunStats, TrialOutcome, TrialStats, wilson_interval

__all__ = [
    "AdaptiveConfig",
    "AdaptiveRunStats",
    "StoppingBoundReport",
    "TrialOutcome",
    "TrialStats",
    "choose_lambda",
    "run_adaptive",
    "run_multi_target",
    "run_separate_search",
    "run_single_target",
    "verify_stopping_bounds",
    "wilson_interval",
]
