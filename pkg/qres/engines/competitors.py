"""
Competitor-law simulation.

The target codeword and the realized query sizes are simulated exactly; the
M^d - 1 competing codewords are summarised by the law of a single
competitor's score, each competitor's bit at time t being Bernoulli(K_t/(M^d - 1))
given the number K_t of other cells in the query. Competitors are treated as
independent of each other, which is the mean-field part of the approximation.
"""

from __future__ import annotations

import math

import numpy as np

from qres.info.density import InfoDensityTable
from qres.info.sums import DEFAULT_TIE_TOL, SumDistribution, scaled_tolerance, tail_probabilities

# numpy's samplers take int64 trial counts and bounds
EXACT_BINOMIAL_LIMIT = 2**62
# Above this mean a huge-trial binomial is drawn as a normal, below it as a Poisson
NORMAL_APPROX_MEAN = 1e6
# Up to this many crossers the largest one is found by drawing them all
DIRECT_DRAW_LIMIT = 64


def uniform_below(rng: np.random.Generator, upper: int) -> int:
    """Uniform integer in [0, upper) for any positive Python int."""
    if upper <= EXACT_BINOMIAL_LIMIT:
        return int(rng.integers(0, upper))
    bits = (upper - 1).bit_length()
    n_bytes = (bits + 7) // 8
    while True:
        j = int.from_bytes(rng.bytes(n_bytes), "little") >> (8 * n_bytes - bits)
        if j < upper:
            return j


def other_ones(rng: np.random.Generator, others: int, p: float, size: int) -> np.ndarray:
    """Number of ones among ``others`` Bernoulli(p) bits, ``size`` times."""
    if others <= 0 or p <= 0.0:
        return np.zeros(size, dtype=float)
    if others < EXACT_BINOMIAL_LIMIT:
        return rng.binomial(others, p, size=size).astype(float)
    mean = float(others) * p
    if mean < NORMAL_APPROX_MEAN:
        return np.minimum(rng.poisson(mean, size=size).astype(float), float(others))
    draw = mean + math.sqrt(mean * (1.0 - p)) * rng.standard_normal(size)
    return np.clip(np.round(draw), 0.0, float(others))


def correct_probability(
    law: SumDistribution,
    target_score: float,
    rank: int,
    cells: int,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> float:
    """
    Pr{target wins the argmax} when ``rank - 1`` competitors precede it in
    index order (and win ties) and ``cells - rank`` follow it (and lose ties).
    """
    if math.isfinite(target_score):
        beaten_by, tied = tail_probabilities(law, target_score, tie_tol)
    else:
        beaten_by, tied = law.mass, law.deficit
    before = rank - 1
    after = cells - rank
    with np.errstate(divide="ignore"):
        log_p = float(before) * np.log1p(-min(1.0, beaten_by + tied)) if before else 0.0
        log_p += float(after) * np.log1p(-min(1.0, beaten_by)) if after else 0.0
    return float(np.exp(log_p))


def uniform_other_cell(rng: np.random.Generator, w: int, M: int, d: int) -> int:
    """A linear cell index drawn uniformly from [1, M^d] without ``w``."""
    j = 1 + uniform_below(rng, M**d - 1)
    return j if j < w else j + 1


def largest_other_cell(rng: np.random.Generator, w: int, cells: int, count: int) -> int:
    """
    Largest index among ``count`` distinct cells drawn uniformly from [1, cells]
    without ``w``.

    Few cells are drawn one by one. Many use the order-statistic inversion
    u^{1/count}, whose float only fixes the leading bits; the bits below
    float precision are drawn uniformly.
    """
    others = cells - 1
    if count <= DIRECT_DRAW_LIMIT:
        chosen: set[int] = set()
        while len(chosen) < count:
            chosen.add(1 + uniform_below(rng, others))
        k = max(chosen)
    else:
        top = float(others) * float(rng.random()) ** (1.0 / count)
        k = math.ceil(top)
        spread = int(math.ulp(top))
        if spread > 1:
            k -= uniform_below(rng, spread)
        k = max(count, min(others, k))
    return k if k < w else k + 1


class AbsorptionState:
    """
    Law of one competitor's running score during an adaptive run, restricted
    to competitors that are still eligible and below the threshold.

    Responses with a finite, nonzero gap v1 - v0 keep a dense axis counting
    the competitor's ones; responses where one bit value has density -inf only
    reweight the mass; responses with v1 = v0 shift the score deterministically.
    """

    def __init__(self, table: InfoDensityTable, lam: float, tie_tol: float = DEFAULT_TIE_TOL):
        values = table.values
        self.v0 = values[0]
        self.v1 = values[1]
        finite = np.isfinite(self.v0) & np.isfinite(self.v1)
        self.dynamic = [int(y) for y in np.flatnonzero(finite & (self.v0 != self.v1))]
        self.axis_of = {y: i for i, y in enumerate(self.dynamic)}
        self.level = lam - scaled_tolerance(lam, tie_tol)
        self.mass = np.ones((1,) * len(self.dynamic))
        self.base = 0.0
        self.crossed = 0.0

    def _scores(self) -> np.ndarray:
        score = np.full(self.mass.shape, self.base)
        for i, y in enumerate(self.dynamic):
            c = np.arange(self.mass.shape[i], dtype=float)
            shape = [1] * self.mass.ndim
            shape[i] = -1
            ones_part = (c * self.v1[y]).reshape(shape)
            zeros_part = ((self.mass.shape[i] - 1 - c) * self.v0[y]).reshape(shape)
            score = score + ones_part + zeros_part
        return score

    def step(self, y: int, pi: float) -> float:
        """
        Advance by response ``y`` with competitor bit probability ``pi`` and
        return the hazard of a not-yet-crossed competitor crossing now.
        """
        if y in self.axis_of:
            axis = self.axis_of[y]
            pad_hi = [(0, 0)] * self.mass.ndim
            pad_lo = [(0, 0)] * self.mass.ndim
            pad_hi[axis] = (0, 1)
            pad_lo[axis] = (1, 0)
            self.mass = np.pad(self.mass, pad_hi) * (1.0 - pi) + np.pad(self.mass, pad_lo) * pi
        else:
            v0, v1 = self.v0[y], self.v1[y]
            keep0 = np.isfinite(v0)
            keep1 = np.isfinite(v1)
            weight = (1.0 - pi) * keep0 + pi * keep1
            self.mass = self.mass * weight
            if keep0 or keep1:
                self.base += v0 if keep0 else v1
        scores = self._scores()
        hit = scores >= self.level
        crossed_now = float(self.mass[hit].sum())
        self.mass = np.where(hit, 0.0, self.mass)
        remaining = 1.0 - self.crossed
        self.crossed += crossed_now
        if remaining <= 0.0:
            return 1.0
        return min(1.0, crossed_now / remaining)
