"""Utility functions for qres."""

from pathlib import Path

import numpy as np

from qres.errors import InvalidParameterError


def ensure_dir(path: Path) -> Path:
    """Ensure a directory exists, creating it if necessary."""
    path.mkdir(parents=True, exist_ok=True)
    return path


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Independent Philox stream for (seed, *keys).

    Streams depend only on the key path, so trials give the same draws
    whatever the worker count or scheduling order.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def parse_range(text: str) -> list[int]:
    """
    Parse an integer list: ``60``, ``20,40,60`` or ``start:stop:step``
    (stop inclusive), e.g. ``20:80:10``.
    """
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise InvalidParameterError(f"bad integer range '{text}' (use 60, 20,40 or 20:80:10)") from e


def parse_float_list(text: str) -> list[float]:
    """Parse ``0.2,0.5,1.0`` or ``start:stop:step`` (stop inclusive) into floats."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [float(v) for v in start + step * np.arange(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise InvalidParameterError(f"bad number list '{text}' (use 0.2,0.5 or 0:1:0.1)") from e


def to_units(value: float | np.ndarray, units: str, power: int = 1) -> float | np.ndarray:
    """Convert a nats quantity (raised to ``power``) into ``units``."""
    if units == "bits":
        return value / np.log(2.0) ** power
    return value
