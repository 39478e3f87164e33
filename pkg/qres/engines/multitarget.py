"""Monte Carlo simulation of simultaneous search for several targets."""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator

import numpy as np
from loguru import logger

from qres.asymptotics.multitarget import nonempty_subsets, union_probability
from qres.channels.models import matrix_at
from qres.engines.nonadaptive import FROZEN_CODEBOOK_KEY
from qres.engines.pool import run_trials
from qres.engines.types import TrialOutcome, TrialStats
from qres.errors import BudgetExceededError, InvalidParameterError
from qres.search.codebook import Codebook, generate_codebook
from qres.search.oracle import oracle_and_noise
from qres.search.space import (
    SearchConfig,
    TargetSampler,
    estimate_point,
    gamma,
    quantize_point,
    uniform_targets,
)
from qres.utils.helpers import trial_rng

DEFAULT_TUPLE_CAP = 2**22
# Upper bound on tuple-by-query entries held at once
CHUNK_ENTRIES = 2**21


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


class ThresholdDecoder:
    """
    Threshold decoder for t = k down to 1: the first tuple of distinct cells
    (in increasing lexicographic order) whose conditional densities all clear
    d |J| log M + gamma is returned.
    """

    def __init__(self, config: SearchConfig, k: int, threshold_gamma: float, tuple_cap: int):
        self.config = config
        self.k = k
        self.threshold_gamma = threshold_gamma
        w = matrix_at(config.family, config.p).entries
        self.log_w = _log(w)
        self.subsets = {t: nonempty_subsets(t) for t in range(1, k + 1)}
        self.log_mixture = {
            size: _log(
                float(union_probability(config.p, size)) * w[1]
                + (1.0 - float(union_probability(config.p, size))) * w[0]
            )
            for size in range(1, k + 1)
        }
        cells = config.cells
        for t in range(1, k + 1):
            if math.comb(cells, t) > tuple_cap:
                raise BudgetExceededError(
                    f"scanning C({cells}, {t}) tuples exceeds the tuple cap {tuple_cap}"
                )

    def threshold(self, size: int) -> float:
        return self.config.d * size * math.log(self.config.M) + self.threshold_gamma

    def _chunks(self, t: int, n: int) -> Iterator[np.ndarray]:
        size = max(1, CHUNK_ENTRIES // (t * n))
        combos = itertools.combinations(range(self.config.cells), t)
        while True:
            block = list(itertools.islice(combos, size))
            if not block:
                return
            yield np.array(block, dtype=np.int64)

    def accepted(self, bits: np.ndarray, responses: np.ndarray) -> np.ndarray:
        """Mask of the tuples (bits shaped (B, t, n)) lying in the threshold set."""
        t = bits.shape[1]
        z = bits.any(axis=1).astype(int)
        with np.errstate(invalid="ignore"):
            numer = self.log_w[z, responses[None, :]].sum(axis=1)
            ok = np.ones(bits.shape[0], dtype=bool)
            for J in self.subsets[t]:
                rest = [j for j in range(t) if j not in J]
                if rest:
                    conditioned = bits[:, rest, :].any(axis=1)
                else:
                    conditioned = np.zeros(bits.shape[::2], dtype=bool)
                denom = np.where(
                    conditioned,
                    self.log_w[1][responses][None, :],
                    self.log_mixture[len(J)][responses][None, :],
                ).sum(axis=1)
                ok &= (numer - denom) > self.threshold(len(J))
                if not ok.any():
                    break
        return ok

    def decode(self, codebook: Codebook, responses: np.ndarray) -> tuple[int, ...] | None:
        """1-based cells of the accepted tuple, or None when no tuple qualifies."""
        n = codebook.n
        for t in range(self.k, 0, -1):
            for block in self._chunks(t, n):
                bits = np.transpose(codebook.bits[:, block], (1, 2, 0))
                hits = np.flatnonzero(self.accepted(bits, responses))
                if hits.size:
                    return tuple(int(c) + 1 for c in block[hits[0]])
        return None


def covers(estimates: np.ndarray, targets: np.ndarray, M: int) -> bool:
    """Every target within 1/M of some estimate and every estimate within 1/M of some target."""
    if estimates.size == 0:
        return False
    gaps = np.abs(targets[:, None, :] - estimates[None, :, :]).max(axis=2)
    close = gaps <= 1.0 / M
    return bool(close.any(axis=1).all() and close.any(axis=0).all())


def run_multi_target(
    config: SearchConfig,
    k: int,
    threshold_gamma: float | None = None,
    target_sampler: TargetSampler = uniform_targets,
    trials: int = 1000,
    threads: int = 1,
    tuple_cap: int = DEFAULT_TUPLE_CAP,
) -> TrialStats:
    """
    Simultaneous search for k targets with an OR oracle and the threshold
    decoder; gamma defaults to 1/2 log n.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    g = 0.5 * math.log(config.n) if threshold_gamma is None else threshold_gamma
    decoder = ThresholdDecoder(config, k, g, tuple_cap)
    frozen = None
    if config.freeze_codebook:
        frozen = generate_codebook(config, trial_rng(config.seed, FROZEN_CODEBOOK_KEY))

    def trial(i: int) -> TrialOutcome:
        rng = trial_rng(config.seed, i)
        targets = np.vstack([target_sampler(rng, config.d) for _ in range(k)])
        cells = sorted({gamma(quantize_point(s, config.M), config.M) for s in targets})
        codebook = frozen if frozen is not None else generate_codebook(config, rng)
        responses = oracle_and_noise(codebook, cells, config.family, rng)
        found = decoder.decode(codebook, responses)
        if found is None:
            return TrialOutcome(excess=True, decode_error=True, empty=True)
        estimates = np.vstack([estimate_point(c, config.M, config.d) for c in found])
        return TrialOutcome(
            excess=not covers(estimates, targets, config.M),
            decode_error=list(found) != cells,
            partial=len(found) < len(cells),
        )

    stats = TrialStats.from_outcomes(run_trials(trial, trials, threads), config.M)
    logger.info(
        f"[sim] multi-target k={k} n={config.n} M={config.M} gamma={g:.4g} "
        f"rate={stats.empirical_rate:.4f}±{stats.half_width:.4f} "
        f"(no tuple {stats.empty_decodes}, short tuple {stats.partial_decodes})"
    )
    return stats
