"""Text formats for channel families."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from qres.channels.models import ChannelFamily, FamilyKind, get_family_def
from qres.errors import InvalidParameterError


def load_constant_matrix(path: Path | str) -> ChannelFamily:
    """
    Read a constant channel from a text file.

    The first line is ``2 |Y|``; the next two lines hold |Y| decimal
    probabilities each (rows x=0 and x=1).
    """
    path = Path(path)
    lines = [line.split() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise InvalidParameterError(f"{path}: header must be '2 |Y|'")
    try:
        rows, cols = int(lines[0][0]), int(lines[0][1])
    except ValueError as e:
        raise InvalidParameterError(f"{path}: malformed header {lines[0]}") from e
    if rows != 2 or cols < 1:
        raise InvalidParameterError(f"{path}: header must be '2 |Y|', got '{rows} {cols}'")
    body = lines[1:]
    if len(body) != 2 or any(len(row) != cols for row in body):
        raise InvalidParameterError(f"{path}: expected 2 rows of {cols} probabilities")
    try:
        matrix = np.array([[float(v) for v in row] for row in body])
    except ValueError as e:
        raise InvalidParameterError(f"{path}: non-numeric probability") from e
    return ChannelFamily.constant(matrix)


def save_constant_matrix(family: ChannelFamily, path: Path | str) -> None:
    """Write a constant channel in the format read by :func:`load_constant_matrix`."""
    if family.kind is not FamilyKind.CONSTANT or family.matrix is None:
        raise InvalidParameterError("only constant channels have a matrix file form")
    matrix = family.matrix
    lines = [f"2 {matrix.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_family(text: str) -> ChannelFamily:
    """
    Parse ``kind:parameter`` (``bsc:0.4``, ``bec:1``, ``z:0.3``) or
    ``constant:<path>`` into a family.
    """
    kind, sep, rest = text.strip().partition(":")
    family_def = get_family_def(kind)
    if family_def.kind is FamilyKind.CONSTANT:
        if not sep or not rest:
            raise InvalidParameterError("constant family needs a matrix file: constant:<path>")
        return load_constant_matrix(rest)
    if not sep:
        raise InvalidParameterError(
            f"family '{text}' needs a parameter, e.g. {family_def.kind.value}:0.4"
        )
    try:
        parameter = float(rest)
    except ValueError as e:
        raise InvalidParameterError(f"bad {family_def.parameter_name} in '{text}'") from e
    return ChannelFamily(kind=family_def.kind, parameter=parameter)


def parse_family_kind(text: str) -> FamilyKind:
    """Family kind from ``bsc`` or ``bsc:0.4`` (the parameter is ignored)."""
    return get_family_def(text.strip().partition(":")[0]).kind
