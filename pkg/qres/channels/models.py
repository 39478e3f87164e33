"""Measurement-dependent channel families and their transition matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from qres.errors import ContinuityError, InvalidParameterError

ROW_TOLERANCE = 1e-12


class FamilyKind(str, Enum):
    """Supported channel families."""

    BSC = "bsc"
    BEC = "bec"
    Z = "z"
    CONSTANT = "constant"


@dataclass(frozen=True)
class FamilyDef:
    """Static metadata for one channel family."""

    kind: FamilyKind
    name: str
    parameter_name: str
    output_alphabet: tuple[str, ...]


FAMILY_DEFS: dict[FamilyKind, FamilyDef] = {
    FamilyKind.BSC: FamilyDef(
        kind=FamilyKind.BSC,
        name="measurement-dependent BSC",
        parameter_name="nu",
        output_alphabet=("0", "1"),
    ),
    FamilyKind.BEC: FamilyDef(
        kind=FamilyKind.BEC,
        name="measurement-dependent BEC",
        parameter_name="tau",
        output_alphabet=("0", "1", "e"),  # erasure is index 2
    ),
    FamilyKind.Z: FamilyDef(
        kind=FamilyKind.Z,
        name="measurement-dependent Z-channel",
        parameter_name="zeta",
        output_alphabet=("0", "1"),
    ),
    FamilyKind.CONSTANT: FamilyDef(
        kind=FamilyKind.CONSTANT,
        name="constant (measurement-independent) channel",
        parameter_name="-",
        output_alphabet=(),
    ),
}


def get_family_def(kind: str | FamilyKind) -> FamilyDef:
    """Get a family definition by key."""
    key = (kind.value if isinstance(kind, FamilyKind) else str(kind)).strip().lower()
    for family_kind, family_def in FAMILY_DEFS.items():
        if family_kind.value == key:
            return family_def
    choices = ", ".join(k.value for k in FAMILY_DEFS)
    raise InvalidParameterError(f"Unknown channel family '{kind}'. Expected one of: {choices}")


def _check_stochastic(matrix: np.ndarray) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != 2 or matrix.shape[1] < 1:
        raise InvalidParameterError(f"channel matrix must be 2x|Y|, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
        raise InvalidParameterError("channel matrix entries must be finite and non-negative")
    rows = matrix.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > ROW_TOLERANCE):
        raise InvalidParameterError(f"channel matrix rows must sum to 1, got {rows.tolist()}")


@dataclass(frozen=True, eq=False)
class ChannelFamily:
    """A measurement-dependent channel law indexed by query size q."""

    kind: FamilyKind
    parameter: float = 0.0
    # Only for CONSTANT: the 2x|Y| stochastic matrix used for every q
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        kind = FamilyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is FamilyKind.CONSTANT:
            if self.matrix is None:
                raise InvalidParameterError("constant channel requires an explicit matrix")
            matrix = np.array(self.matrix, dtype=float)
            _check_stochastic(matrix)
            matrix.setflags(write=False)
            object.__setattr__(self, "matrix", matrix)
            object.__setattr__(self, "parameter", 0.0)
            return
        parameter = float(self.parameter)
        if math.isnan(parameter) or not 0.0 <= parameter <= 1.0:
            raise InvalidParameterError(
                f"{kind.value} parameter must lie in [0, 1], got {self.parameter}"
            )
        object.__setattr__(self, "parameter", parameter)

    @classmethod
    def constant(cls, matrix: np.ndarray | list[list[float]]) -> ChannelFamily:
        """Wrap an explicit stochastic matrix as a query-size independent family."""
        return cls(kind=FamilyKind.CONSTANT, matrix=np.asarray(matrix, dtype=float))

    @property
    def output_alphabet(self) -> tuple[str, ...]:
        if self.kind is FamilyKind.CONSTANT:
            assert self.matrix is not None
            return tuple(str(i) for i in range(self.matrix.shape[1]))
        return FAMILY_DEFS[self.kind].output_alphabet

    @property
    def output_size(self) -> int:
        return len(self.output_alphabet)

    @property
    def label(self) -> str:
        """Short text form, e.g. ``bsc:0.4``."""
        if self.kind is FamilyKind.CONSTANT:
            return "constant"
        return f"{self.kind.value}:{self.parameter:g}"

    def with_parameter(self, parameter: float) -> ChannelFamily:
        """Same family kind with another parameter."""
        if self.kind is FamilyKind.CONSTANT:
            raise InvalidParameterError("constant channel has no parameter")
        return ChannelFamily(kind=self.kind, parameter=parameter)

    def affine_parts(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (A, B) with P^q(y|x) = A + B*q for every q in [0, 1]."""
        a = self.parameter
        if self.kind is FamilyKind.BSC:
            return np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[-a, a], [a, -a]])
        if self.kind is FamilyKind.BEC:
            return (
                np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                np.array([[-a, 0.0, a], [0.0, -a, a]]),
            )
        if self.kind is FamilyKind.Z:
            return np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 0.0], [a, -a]])
        assert self.matrix is not None
        return np.array(self.matrix), np.zeros_like(self.matrix)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Transition matrix P^q(y|x) of a family at one query size."""

    entries: np.ndarray
    output_alphabet: tuple[str, ...]
    query_size: float

    @property
    def input_alphabet_size(self) -> int:
        return 2

    @property
    def output_size(self) -> int:
        return len(self.output_alphabet)

    def row(self, x: int) -> np.ndarray:
        return self.entries[x]

    def prob(self, y: int, x: int) -> float:
        return float(self.entries[x, y])


def _check_query_size(q: float) -> float:
    q = float(q)
    if math.isnan(q):
        raise InvalidParameterError("query size q is NaN")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"query size q must lie in [0, 1], got {q}")
    return q


def entries_at(family: ChannelFamily, q: np.ndarray | float) -> np.ndarray:
    """Transition entries for one or many query sizes, shape (..., 2, |Y|)."""
    base, slope = family.affine_parts()
    q_arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(q_arr)) or np.any((q_arr < 0.0) | (q_arr > 1.0)):
        raise InvalidParameterError("query sizes must lie in [0, 1]")
    return base + slope * q_arr[..., None, None]


def matrix_at(family: ChannelFamily, q: float) -> ChannelMatrix:
    """Transition matrix of ``family`` when the posed query has size ``q``."""
    q = _check_query_size(q)
    entries = entries_at(family, q)
    entries.setflags(write=False)
    return ChannelMatrix(entries=entries, output_alphabet=family.output_alphabet, query_size=q)


def continuity_constant(family: ChannelFamily, q: float, xi0: float) -> float:
    """
    Local Lipschitz constant of q -> log P^q(y|x) on [q - xi0, q + xi0].

    Every family is affine in q, so |d/dq' log P^{q'}(y|x)| = |B|/P^{q'}(y|x)
    peaks at a window endpoint. Entry pairs that are zero at q are skipped.
    """
    q = _check_query_size(q)
    xi0 = float(xi0)
    if not 0.0 < q < 1.0:
        raise InvalidParameterError(f"continuity needs 0 < q < 1, got {q}")
    if not 0.0 < xi0 < min(q, 1.0 - q):
        raise InvalidParameterError(f"window xi0 must lie in (0, min(q, 1-q)), got {xi0}")

    base, slope = family.affine_parts()
    centre = base + slope * q
    low = base + slope * (q - xi0)
    high = base + slope * (q + xi0)
    support = centre > 0.0
    moving = support & (slope != 0.0)
    if not np.any(moving):
        return 0.0
    floor = np.minimum(low, high)[moving]
    if np.any(floor <= 0.0):
        raise ContinuityError(
            f"a transition probability of {family.label} reaches zero inside "
            f"[{q - xi0:g}, {q + xi0:g}]"
        )
    return float(np.max(np.abs(slope[moving]) / floor))
