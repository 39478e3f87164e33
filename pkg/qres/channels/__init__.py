"""Measurement-dependent channel models."""

from qres.channels.io import (
    load_constant_matrix,
    parse_family,
    parse_family_kind,
    save_constant_matrix,
)
from qres.channels.models import (
    ChannelFamily,
    ChannelMatrix,
    FamilyKind,
    continuity_constant,
    entries_at,
    matrix_at,
)

__all__ = [
    "ChannelFamily",
    "ChannelMatrix",
    "FamilyKind",
    "continuity_constant",
    "entries_at",
    "load_constant_matrix",
    "matrix_at",
    "parse_family",
    "parse_family_kind",
    "save_constant_matrix",
]
