"""Exact laws of sums of information densities by iterated convolution."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from scipy.stats import binom

from qres.errors import InvalidParameterError, SupportExplosionError, UndefinedDensityError
from qres.info.density import InfoDensityTable

DEFAULT_MERGE_TOL = 1e-12
DEFAULT_TIE_TOL = 1e-9
DEFAULT_SUPPORT_CAP = 4_000_000


def scaled_tolerance(value: np.ndarray | float, tol: float) -> np.ndarray | float:
    """
    Tie tolerance around a score: absolute ``tol`` near zero, relative ``tol``
    for |value| > 1. Merging of support values uses the absolute merge tolerance.
    """
    return tol * np.maximum(1.0, np.abs(value))


@dataclass(eq=False)
class SumDistribution:
    """Finite-support law of a sum; ``deficit`` is the mass sitting at -inf."""

    n: int
    support: np.ndarray
    probs: np.ndarray
    deficit: float = 0.0
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.support = np.asarray(self.support, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        self.cumulative = self.deficit + np.cumsum(self.probs)

    @property
    def mass(self) -> float:
        """Total finite mass."""
        return float(self.probs.sum())

    @property
    def size(self) -> int:
        return int(self.support.size)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs) / self.mass)


def compact_atoms(
    values: np.ndarray,
    probs: np.ndarray,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Sort atoms, merge neighbours no further apart than the absolute merge
    tolerance (probability-weighted value) and move -inf atoms into a deficit.
    """
    values = np.asarray(values, dtype=float).ravel()
    probs = np.asarray(probs, dtype=float).ravel()
    finite = np.isfinite(values)
    deficit = float(probs[~finite].sum())
    keep = finite & (probs > 0.0)
    v = values[keep]
    pr = probs[keep]
    if v.size == 0:
        return v, pr, deficit
    order = np.argsort(v, kind="stable")
    v = v[order]
    pr = pr[order]
    gaps = np.diff(v)
    starts = np.concatenate(([0], np.flatnonzero(gaps > merge_tol) + 1))
    mass = np.add.reduceat(pr, starts)
    centre = np.add.reduceat(pr * v, starts) / mass
    return centre, mass, deficit


def convolve(
    a: SumDistribution,
    b: SumDistribution,
    merge_tol: float = DEFAULT_MERGE_TOL,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> SumDistribution:
    """Law of the sum of two independent variables."""
    if a.size * b.size > 4 * support_cap:
        raise SupportExplosionError(
            f"convolution of {a.size} x {b.size} atoms exceeds the support cap {support_cap}"
        )
    values = (a.support[:, None] + b.support[None, :]).ravel()
    probs = (a.probs[:, None] * b.probs[None, :]).ravel()
    support, mass, _ = compact_atoms(values, probs, merge_tol)
    deficit = a.deficit + b.deficit - a.deficit * b.deficit
    return SumDistribution(n=a.n + b.n, support=support, probs=mass, deficit=deficit)


def _snap(values: np.ndarray, grid: float) -> np.ndarray:
    """Integer grid keys; values within ``grid`` of their left neighbour share its key."""
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    leads = np.concatenate(([True], np.diff(ordered) > grid))
    group = np.cumsum(leads) - 1
    keys = np.empty(values.size, dtype=np.int64)
    keys[order] = np.rint(ordered[leads][group] / grid).astype(np.int64)
    return keys


def lattice_keys(table: InfoDensityTable, grid: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Grid keys and probabilities of the used cells.

    log P(y|x) and log P_Y(y) are snapped separately, so the keys of the
    densities satisfy the same integer relations as the logs they are built
    from and n-fold sums stay on a low-dimensional lattice.
    """
    rows, cols = np.nonzero(table.used)
    with np.errstate(divide="ignore"):
        logs = np.concatenate(
            (np.log(table.channel.entries[rows, cols]), np.log(table.output_marginal[cols]))
        )
    if not np.all(np.isfinite(logs)):
        raise UndefinedDensityError("a used cell of the density table is -inf")
    keys = _snap(logs, grid)
    return keys[: rows.size] - keys[rows.size :], table.joint_prob[rows, cols]


def _merge_keys(keys: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    probs = probs[order]
    starts = np.concatenate(([0], np.flatnonzero(np.diff(keys)) + 1))
    keys = keys[starts]
    probs = np.add.reduceat(probs, starts)
    keep = probs > 0.0
    return keys[keep], probs[keep]


def sum_distribution(
    table: InfoDensityTable,
    n: int,
    merge_tol: float = DEFAULT_MERGE_TOL,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> SumDistribution:
    """
    Exact law of sum_{i<=n} iota(X_i;Y_i) for i.i.d. draws from the table's joint law.

    Sums are accumulated as integer multiples of ``merge_tol``, so equal
    lattice points always merge and rounding never accumulates across steps.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n}")
    if not merge_tol > 0.0:
        raise InvalidParameterError(f"merge_tol must be positive, got {merge_tol}")
    base_keys, base_probs = _merge_keys(*lattice_keys(table, merge_tol))
    if n * int(np.max(np.abs(base_keys))) >= 2**62:
        raise InvalidParameterError(
            f"sums of {n} densities overflow a grid of {merge_tol}; raise merge_tol"
        )
    keys, probs = base_keys, base_probs
    for step in range(2, n + 1):
        keys, probs = _merge_keys(
            (base_keys[:, None] + keys[None, :]).ravel(),
            (base_probs[:, None] * probs[None, :]).ravel(),
        )
        if keys.size > support_cap:
            raise SupportExplosionError(
                f"support reached {keys.size} atoms at step {step}/{n} "
                f"(cap {support_cap}); raise merge_tol or the cap"
            )
    dist = SumDistribution(n=n, support=keys.astype(float) * merge_tol, probs=probs)
    logger.debug(f"[sums] n={n} support={dist.size} mass={dist.mass:.12f}")
    return dist


def cdf(dist: SumDistribution, t: float) -> float:
    """Right-continuous CDF Pr{sum <= t}."""
    idx = int(np.searchsorted(dist.support, t, side="right"))
    if idx == 0:
        return dist.deficit
    if idx == dist.size:
        return 1.0
    return float(min(1.0, dist.cumulative[idx - 1]))


def quantile(dist: SumDistribution, level: float) -> float:
    """
    sup{t : Pr{sum <= t} <= level}.

    The CDF is a step function, so the supremum is the first support point
    whose CDF exceeds ``level``; -inf when the mass at -inf already does.
    """
    if not 0.0 < level < 1.0:
        raise InvalidParameterError(f"quantile level must lie in (0, 1), got {level}")
    if dist.size == 0 or dist.deficit > level:
        return -np.inf
    idx = int(np.searchsorted(dist.cumulative, level, side="right"))
    return float(dist.support[min(idx, dist.size - 1)])


def tail_probabilities(
    dist: SumDistribution,
    threshold: float,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> tuple[float, float]:
    """(Pr{sum > threshold}, Pr{sum == threshold}) with ties judged within ``tie_tol``."""
    tol = scaled_tolerance(threshold, tie_tol)
    above = dist.support > threshold + tol
    tied = np.abs(dist.support - threshold) <= tol
    return float(dist.probs[above].sum()), float(dist.probs[tied].sum())


# ----------------------------------------------------------------------
# Count-lattice laws for sums of two-point variables
# ----------------------------------------------------------------------


def poisson_binomial_pmf(probs: np.ndarray) -> np.ndarray:
    """Law of the number of successes among independent Bernoulli(probs[i])."""
    probs = np.asarray(probs, dtype=float)
    pmf = np.zeros(probs.size + 1)
    pmf[0] = 1.0
    for i, pi in enumerate(probs):
        pmf[1 : i + 2] = pmf[1 : i + 2] * (1.0 - pi) + pmf[: i + 1] * pi
        pmf[0] *= 1.0 - pi
    return pmf


def group_terms(m: int, v0: float, v1: float) -> np.ndarray:
    """Score of a group of m symbols holding c ones, for c = 0..m (0 * -inf = 0)."""
    c = np.arange(m + 1, dtype=float)
    zeros = m - c
    with np.errstate(invalid="ignore"):
        t0 = np.where(zeros > 0, zeros * v0, 0.0)
        t1 = np.where(c > 0, c * v1, 0.0)
    return t0 + t1


def lattice_score(table: InfoDensityTable, group_sizes: np.ndarray, ones: np.ndarray) -> float:
    """sum_t iota(x_t;y_t) of one codeword from its per-symbol ones counts."""
    total = 0.0
    for y, (m, c) in enumerate(zip(group_sizes, ones)):
        total += float(group_terms(int(m), table.values[0, y], table.values[1, y])[int(c)])
    return total


def lattice_law(
    table: InfoDensityTable,
    group_sizes: np.ndarray,
    count_pmfs: list[np.ndarray],
    merge_tol: float = DEFAULT_MERGE_TOL,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> SumDistribution:
    """
    Law of sum_y group_terms(m_y)[C_y] for independent ones counts C_y ~ count_pmfs[y].

    Groups whose score does not depend on the count collapse to one atom,
    and counts forced by a -inf density collapse to that count.
    """
    dist = SumDistribution(n=0, support=np.zeros(1), probs=np.ones(1))
    for y, m in enumerate(group_sizes):
        m = int(m)
        terms = group_terms(m, table.values[0, y], table.values[1, y])
        pmf = np.asarray(count_pmfs[y], dtype=float)
        support, mass, deficit = compact_atoms(terms, pmf, merge_tol)
        block = SumDistribution(n=m, support=support, probs=mass, deficit=deficit)
        dist = convolve(dist, block, merge_tol, support_cap)
    return dist


def two_point_law(
    table: InfoDensityTable,
    responses: np.ndarray,
    bit_probs: np.ndarray | float,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> SumDistribution:
    """
    Law of sum_t iota(B_t; y_t) for independent B_t ~ Bernoulli(bit_probs[t])
    and fixed responses y_t; mass of -inf sums is reported as the deficit.
    """
    responses = np.asarray(responses, dtype=int)
    n_outputs = table.values.shape[1]
    sizes = np.bincount(responses, minlength=n_outputs)
    constant = np.ndim(bit_probs) == 0
    pmfs = []
    for y in range(n_outputs):
        if constant:
            pmfs.append(binom.pmf(np.arange(sizes[y] + 1), sizes[y], float(bit_probs)))
        else:
            pmfs.append(poisson_binomial_pmf(np.asarray(bit_probs)[responses == y]))
    law = lattice_law(table, sizes, pmfs, merge_tol)
    law.n = int(responses.size)
    return law


def write_csv(dist: SumDistribution, path: Path | str) -> None:
    """Two-column (value, prob) export."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["value", "prob"])
        for value, prob in zip(dist.support, dist.probs):
            writer.writerow([repr(float(value)), repr(float(prob))])
