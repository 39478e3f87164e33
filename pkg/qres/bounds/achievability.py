"""Random-coding union bound with a change of measure for the realized query sizes."""

from __future__ import annotations

import math

import numpy as np
from loguru import logger

from qres.bounds.types import AchievabilityResult
from qres.channels.models import ChannelFamily, continuity_constant, matrix_at
from qres.engines.pool import run_trials
from qres.errors import InvalidParameterError
from qres.info.density import InfoDensityTable, density_table
from qres.info.sums import DEFAULT_MERGE_TOL, lattice_score, tail_probabilities, two_point_law
from qres.utils.helpers import trial_rng

DEFAULT_MC_SAMPLES = 10_000


def default_eta(d: int, M: int) -> float:
    """sqrt(d log M / (2 M^d))."""
    return math.sqrt(d * math.log(M) / (2.0 * M**d))


def pairwise_error_probability(
    table: InfoDensityTable,
    x: np.ndarray,
    y: np.ndarray,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> float:
    """Pr{iota(Xbar^n; y^n) >= iota(x^n; y^n)} for an independent Bernoulli(p) codeword Xbar^n."""
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    n_outputs = table.values.shape[1]
    sizes = np.bincount(y, minlength=n_outputs)
    ones = np.bincount(y[x == 1], minlength=n_outputs)
    return _pairwise_from_counts(table, sizes, ones, merge_tol)


def _pairwise_from_counts(
    table: InfoDensityTable, sizes: np.ndarray, ones: np.ndarray, merge_tol: float
) -> float:
    score = lattice_score(table, sizes, ones)
    responses = np.repeat(np.arange(sizes.size), sizes)
    law = two_point_law(table, responses, table.input_prob, merge_tol)
    if not math.isfinite(score):
        return law.mass + law.deficit
    above, tied = tail_probabilities(law, score)
    return above + tied


def achievability_bound(
    family: ChannelFamily,
    n: int,
    d: int,
    M: int,
    p: float,
    eta: float | None = None,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    threads: int = 1,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> AchievabilityResult:
    """
    4n exp(-2 M^d eta^2) + exp(n eta c(p)) E[min{1, M^d Pr{iota(Xbar;Y) >= iota(X;Y) | X, Y}}].

    The outer expectation is Monte Carlo over (X^n, Y^n) drawn under the
    nominal channel at p; the inner probability is exact.
    """
    if n < 1 or d < 1 or M < 1:
        raise InvalidParameterError(f"need n, d, M >= 1, got n={n}, d={d}, M={M}")
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p}")
    if mc_samples < 1:
        raise InvalidParameterError(f"mc_samples must be >= 1, got {mc_samples}")
    cells = M**d
    window = min(p, 1.0 - p)
    eta_clamped = False
    if eta is None:
        eta = default_eta(d, M)
        if eta >= window:
            logger.info(
                f"[bounds] default eta {eta:.4g} leaves [0, {window:.4g}); using {0.5 * window:.4g}"
            )
            eta = 0.5 * window
            eta_clamped = True
    eta = float(eta)
    if not 0.0 <= eta < window:
        raise InvalidParameterError(f"eta must lie in [0, min(p, 1-p)), got {eta}")
    c = continuity_constant(family, p, eta) if eta > 0.0 else 0.0

    term1 = 4.0 * n * math.exp(-2.0 * cells * eta * eta)
    table = density_table(p, matrix_at(family, p))
    n_outputs = table.values.shape[1]
    counts = trial_rng(seed).multinomial(n, table.joint_prob.ravel(), size=mc_samples)
    keys, inverse = np.unique(counts, axis=0, return_inverse=True)

    def inner(i: int) -> float:
        pair_counts = keys[i].reshape(2, n_outputs)
        sizes = pair_counts.sum(axis=0)
        prob = _pairwise_from_counts(table, sizes, pair_counts[1], merge_tol)
        return min(1.0, cells * prob)

    values = np.array(run_trials(inner, len(keys), threads))[np.ravel(inverse)]
    scale = math.exp(n * eta * c)
    term2 = scale * float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    eps_upper = term1 + term2
    result = AchievabilityResult(
        eps_upper=eps_upper,
        clipped=eps_upper > 1.0,
        eps_upper_clipped=min(1.0, eps_upper),
        half_width=1.96 * scale * se,
        term1=term1,
        term2=term2,
        p=p,
        eta=eta,
        eta_clamped=eta_clamped,
        continuity=c,
        mc_samples=mc_samples,
    )
    logger.info(
        f"[bounds] achievability n={n} d={d} M={M} eps<={eps_upper:.6g} "
        f"(term1={term1:.3g}, term2={term2:.3g}, {len(keys)} distinct count patterns)"
    )
    if result.clipped:
        logger.warning(f"[bounds] achievability bound {eps_upper:.4g} exceeds 1 and is vacuous")
    return result
