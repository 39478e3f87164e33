"""Quantization of the unit cube, the cell index mapping and query-procedure parameters."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from qres.channels.models import ChannelFamily
from qres.errors import InvalidParameterError

DEFAULT_CELL_CAP = 2**24
# Largest n * M^d materialised as an explicit codebook by the auto decoder mode
DEFAULT_CODEBOOK_BUDGET = 2**22

TargetSampler = Callable[[np.random.Generator, int], np.ndarray]


class DecoderMode(str, Enum):
    """How the M^d - 1 competing codewords are simulated."""

    AUTO = "auto"
    CODEBOOK = "codebook"
    COMPETITOR = "competitor"


# ----------------------------------------------------------------------
# Cells
# ----------------------------------------------------------------------


def quantize(s: float, M: int) -> int:
    """Cell index ceil(s M) in [1, M]; s = 0 maps to cell 1."""
    if not 0.0 <= s <= 1.0:
        raise InvalidParameterError(f"point coordinate must lie in [0, 1], got {s}")
    return max(1, min(M, math.ceil(Fraction(s) * M)))


def quantize_point(s: Sequence[float] | np.ndarray, M: int) -> tuple[int, ...]:
    return tuple(quantize(float(v), M) for v in s)


def midpoint(w: int, M: int) -> float:
    """Centre (2w - 1)/(2M) of cell w."""
    return (2 * w - 1) / (2 * M)


def gamma(indices: Sequence[int], M: int) -> int:
    """1 + sum_j (i_j - 1) M^{d-j}: linear index in [1, M^d]."""
    index = 0
    for i in indices:
        i = int(i)
        if not 1 <= i <= M:
            raise InvalidParameterError(f"cell index {i} outside [1, {M}]")
        index = index * M + (i - 1)
    return index + 1


def gamma_inv(index: int, M: int, d: int) -> tuple[int, ...]:
    """Inverse of :func:`gamma`."""
    index = int(index)
    if not 1 <= index <= M**d:
        raise InvalidParameterError(f"linear index {index} outside [1, {M}^{d}]")
    rest = index - 1
    digits = []
    for _ in range(d):
        rest, digit = divmod(rest, M)
        digits.append(digit + 1)
    return tuple(reversed(digits))


def estimate_point(cell: int, M: int, d: int) -> np.ndarray:
    """Midpoint estimate of a linear cell index."""
    return np.array([midpoint(w, M) for w in gamma_inv(cell, M, d)])


def excess_resolution(cell: int, target: Sequence[float] | np.ndarray, M: int) -> bool:
    """
    True when the midpoint of ``cell`` misses some target coordinate by
    strictly more than 1/M. Compared in exact rationals; a double cannot
    resolve cells narrower than its own spacing.
    """
    indices = gamma_inv(cell, M, len(target))
    bound = Fraction(1, M)
    return any(
        abs(Fraction(2 * w - 1, 2 * M) - Fraction(float(s))) > bound
        for w, s in zip(indices, target)
    )


def cells_from_log(log_M: float) -> int:
    """Integer M = max(2, floor(exp(log M)))."""
    if log_M > 700.0:
        raise InvalidParameterError(f"log M = {log_M:.4g} overflows the cell count")
    return max(2, int(math.floor(math.exp(log_M))))


# ----------------------------------------------------------------------
# Targets
# ----------------------------------------------------------------------


def uniform_targets(rng: np.random.Generator, d: int) -> np.ndarray:
    """A target drawn uniformly from [0, 1]^d."""
    return rng.random(d)


def fixed_target(point: Sequence[float]) -> TargetSampler:
    """Sampler that always returns ``point``."""
    value = np.asarray(point, dtype=float)

    def sample(rng: np.random.Generator, d: int) -> np.ndarray:
        if value.size != d:
            raise InvalidParameterError(f"fixed target has dimension {value.size}, expected {d}")
        return value.copy()

    return sample


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------


@dataclass
class SearchConfig:
    """Parameters of a non-adaptive query procedure."""

    n: int
    d: int
    M: int
    p: float
    family: ChannelFamily
    seed: int = 0
    # Largest M^d an explicit codebook may hold
    cell_cap: int = DEFAULT_CELL_CAP
    freeze_codebook: bool = False
    decoder_mode: DecoderMode = DecoderMode.AUTO
    codebook_budget: int = DEFAULT_CODEBOOK_BUDGET

    def __post_init__(self) -> None:
        self.decoder_mode = DecoderMode(self.decoder_mode)
        if self.n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {self.n}")
        if self.d < 1:
            raise InvalidParameterError(f"d must be >= 1, got {self.d}")
        if self.M < 2:
            raise InvalidParameterError(f"M must be >= 2, got {self.M}")
        if math.isnan(self.p) or not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must lie in [0, 1], got {self.p}")

    @property
    def cells(self) -> int:
        """M^d as an exact integer."""
        return self.M**self.d

    @property
    def delta(self) -> float:
        return 1.0 / self.M

    def use_codebook(self) -> bool:
        """Whether trials materialise every codeword."""
        if self.decoder_mode is DecoderMode.CODEBOOK:
            return True
        if self.decoder_mode is DecoderMode.COMPETITOR:
            return False
        return self.cells <= self.cell_cap and self.n * self.cells <= self.codebook_budget
