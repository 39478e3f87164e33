"""Configuration module for qres."""

from qres.config.loader import load_spec, resolve_spec, save_spec
from qres.config.schema import Command, ExperimentSpec, Settings, Units

__all__ = ["Command", "ExperimentSpec", "Settings", "Units", "load_spec", "resolve_spec", "save_spec"]
