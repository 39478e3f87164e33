"""Random Bernoulli codebooks over the M^d cells."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from qres.errors import BudgetExceededError, InvalidParameterError
from qres.search.space import SearchConfig
from qres.utils.helpers import trial_rng

_HEADER = struct.Struct("<II")


@dataclass(frozen=True, eq=False)
class Codebook:
    """
    n x M^d bit matrix; column ``cell - 1`` is the codeword of linear cell index
    ``cell``, row t is the query posed at time t.
    """

    bits: np.ndarray
    column_ones_count: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise InvalidParameterError(f"codebook must be a 2-D bit matrix, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "column_ones_count", bits.sum(axis=1))

    @property
    def n(self) -> int:
        return int(self.bits.shape[0])

    @property
    def cells(self) -> int:
        return int(self.bits.shape[1])

    @property
    def query_sizes(self) -> np.ndarray:
        """Realized size q_t of every query."""
        return self.column_ones_count / self.cells

    def codeword(self, cell: int) -> np.ndarray:
        return self.bits[:, cell - 1]

    def collisions(self, cell: int) -> int:
        """Number of other cells whose codeword equals that of ``cell``."""
        same = np.all(self.bits == self.bits[:, [cell - 1]], axis=0)
        return int(same.sum()) - 1


def generate_codebook(config: SearchConfig, rng: np.random.Generator | None = None) -> Codebook:
    """I.i.d. Bernoulli(p) bits; the seed's own stream is used when ``rng`` is omitted."""
    cells = config.cells
    if cells > config.cell_cap:
        raise BudgetExceededError(
            f"codebook of {cells} cells exceeds the cell cap {config.cell_cap}"
        )
    rng = rng if rng is not None else trial_rng(config.seed)
    bits = rng.random((config.n, cells)) < config.p
    logger.debug(f"[codebook] n={config.n} cells={cells} ones={int(bits.sum())}")
    return Codebook(bits=bits)


def dump_codebook(codebook: Codebook, path: Path | str) -> None:
    """Row-major packed bits after an 8-byte little-endian header (n, M^d)."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(codebook.n, codebook.cells))
        f.write(np.packbits(codebook.bits, axis=None).tobytes())


def load_codebook(path: Path | str) -> Codebook:
    """Read a file written by :func:`dump_codebook`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidParameterError(f"{path}: truncated codebook header")
    n, cells = _HEADER.unpack_from(raw)
    payload = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
    if payload.size * 8 < n * cells:
        raise InvalidParameterError(f"{path}: expected {n}x{cells} bits")
    bits = np.unpackbits(payload, count=n * cells).reshape(n, cells)
    return Codebook(bits=bits.astype(bool))
