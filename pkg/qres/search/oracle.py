"""Noiseless oracle answers and measurement-dependent noise."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from qres.channels.models import ChannelFamily, entries_at
from qres.errors import InvalidParameterError
from qres.search.codebook import Codebook


def noiseless_answers(codebook: Codebook, targets: int | Iterable[int]) -> np.ndarray:
    """z_t: the target cell's bit, or the OR over several target cells."""
    cells = [targets] if isinstance(targets, (int, np.integer)) else list(targets)
    if not cells:
        raise InvalidParameterError("at least one target cell is required")
    for cell in cells:
        if not 1 <= int(cell) <= codebook.cells:
            raise InvalidParameterError(f"cell {cell} outside [1, {codebook.cells}]")
    columns = codebook.bits[:, [int(c) - 1 for c in cells]]
    return columns.any(axis=1).astype(np.int8)


def sample_responses(
    family: ChannelFamily,
    query_sizes: np.ndarray,
    answers: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw y_t from row z_t of the family's matrix at the realized size q_t."""
    entries = entries_at(family, np.asarray(query_sizes, dtype=float))
    rows = entries[np.arange(len(answers)), np.asarray(answers, dtype=int)]
    cumulative = np.cumsum(rows, axis=1)
    u = rng.random(len(answers))
    y = (u[:, None] >= cumulative).sum(axis=1)
    return np.minimum(y, rows.shape[1] - 1)


def oracle_and_noise(
    codebook: Codebook,
    targets: int | Iterable[int],
    family: ChannelFamily,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy responses y^n for the given target cell(s)."""
    z = noiseless_answers(codebook, targets)
    return sample_responses(family, codebook.query_sizes, z, rng)
