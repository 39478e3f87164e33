"""Capacity, dispersion and second-order resolution approximations."""

from qres.asymptotics.capacity import (
    CapacityResult,
    capacity,
    capacity_at,
    dispersion_for_eps,
    mi_capacity,
    mismatched_capacity,
)
from qres.asymptotics.multitarget import (
    MultiTargetStats,
    multi_target_optimize,
    multi_target_resolution,
)
from qres.asymptotics.resolution import (
    ThirdOrder,
    adaptive_mi_resolution,
    adaptive_resolution_bound,
    adaptivity_gain_lower,
    mi_counterpart,
    phase_transition_probability,
    pm_asymptotic_rate,
    second_order_resolution,
    separate_search_resolution,
)

__all__ = [
    "CapacityResult",
    "MultiTargetStats",
    "ThirdOrder",
    "adaptive_mi_resolution",
    "adaptive_resolution_bound",
    "adaptivity_gain_lower",
    "capacity",
    "capacity_at",
    "dispersion_for_eps",
    "mi_capacity",
    "mi_counterpart",
    "mismatched_capacity",
    "multi_target_optimize",
    "multi_target_resolution",
    "phase_transition_probability",
    "pm_asymptotic_rate",
    "second_order_resolution",
    "separate_search_resolution",
]
