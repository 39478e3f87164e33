"""Ordered parallel execution of independent trials."""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from loguru import logger

T = TypeVar("T")


def run_trials(trial: Callable[[int], T], trials: int, threads: int = 1) -> list[T]:
    """
    Run ``trial(i)`` for i in [0, trials) and return the results in index order.

    Each trial owns its random stream, so the result list is identical for
    every ``threads`` value.
    """
    if trials < 1:
        return []
    if threads <= 1:
        return [trial(i) for i in range(trials)]
    logger.debug(f"[pool] {trials} trials on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(trial, range(trials)))
