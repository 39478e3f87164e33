"""Utility functions for qres."""

from qres.utils.helpers import ensure_dir, parse_float_list, parse_range, to_units, trial_rng

__all__ = ["ensure_dir", "parse_float_list", "parse_range", "to_units", "trial_rng"]
