"""Berry-Esseen certification of the Gaussian approximation to density sums."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from qres.errors import InvalidParameterError
from qres.info.density import InfoDensityTable, stats
from qres.info.normal import gaussian_cdf
from qres.info.sums import DEFAULT_MERGE_TOL, sum_distribution

BERRY_ESSEEN_FACTOR = 6.0


class BerryEsseenGap(NamedTuple):
    max_gap: float
    bound: float

    @property
    def certified(self) -> bool:
        return self.max_gap <= self.bound


def berry_esseen_bound(T: float, V: float, n: int) -> float:
    """6 T / (sqrt(n) V^{3/2})."""
    return BERRY_ESSEEN_FACTOR * T / (math.sqrt(n) * V**1.5)


def berry_esseen_gap(
    table: InfoDensityTable,
    n: int,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> BerryEsseenGap:
    """Largest gap between the exact CDF and its Gaussian approximation, at support points."""
    moments = stats(table)
    if moments.V <= 0.0:
        raise InvalidParameterError("Berry-Esseen gap needs a density with positive variance")
    dist = sum_distribution(table, n, merge_tol)
    exact = np.minimum(dist.cumulative, 1.0)
    z = (dist.support - n * moments.C) / math.sqrt(n * moments.V)
    gap = float(np.max(np.abs(exact - gaussian_cdf(z))))
    return BerryEsseenGap(max_gap=gap, bound=berry_esseen_bound(moments.T, moments.V, n))
