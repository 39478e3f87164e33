"""Monte Carlo simulation of the non-adaptive single-target query procedure."""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np
from loguru import logger

from qres.channels.models import matrix_at
from qres.engines.competitors import (
    correct_probability,
    other_ones,
    uniform_other_cell,
)
from qres.engines.pool import run_trials
from qres.engines.types import TrialOutcome, TrialStats
from qres.errors import InvalidParameterError
from qres.info.density import InfoDensityTable, density_table
from qres.info.sums import DEFAULT_TIE_TOL, scaled_tolerance, two_point_law
from qres.search.codebook import Codebook, generate_codebook
from qres.search.oracle import oracle_and_noise, sample_responses
from qres.search.space import (
    SearchConfig,
    TargetSampler,
    excess_resolution,
    gamma,
    quantize_point,
    uniform_targets,
)
from qres.utils.helpers import trial_rng

# Substream key of a frozen codebook; trial streams use their trial index
FROZEN_CODEBOOK_KEY = 2**32


class Decoded(NamedTuple):
    cell: int
    collision: bool = False


def nominal_table(config: SearchConfig) -> InfoDensityTable:
    """Density table iota_{p,p} the decoder scores with."""
    return density_table(config.p, matrix_at(config.family, config.p))


def codeword_scores(table: InfoDensityTable, codebook: Codebook, responses: np.ndarray) -> np.ndarray:
    """
    sum_t iota(x_t(cell); y_t) for every cell, built from per-response ones
    counts so that equal count patterns give bit-identical scores.
    """
    scores = np.zeros(codebook.cells)
    for y in range(table.values.shape[1]):
        rows = responses == y
        m = int(rows.sum())
        if m == 0:
            continue
        ones = codebook.bits[rows].sum(axis=0)
        zeros = m - ones
        v0, v1 = table.values[0, y], table.values[1, y]
        with np.errstate(invalid="ignore"):
            scores += np.where(zeros > 0, zeros * v0, 0.0) + np.where(ones > 0, ones * v1, 0.0)
    return scores


def argmax_cell(scores: np.ndarray, tie_tol: float = DEFAULT_TIE_TOL) -> int:
    """1-based index of the best score; ties go to the smallest index."""
    best = float(np.max(scores))
    if not np.isfinite(best):
        return 1
    return int(np.flatnonzero(scores >= best - scaled_tolerance(best, tie_tol))[0]) + 1


def decode_codebook(
    config: SearchConfig,
    table: InfoDensityTable,
    codebook: Codebook,
    w: int,
    rng: np.random.Generator,
) -> Decoded:
    responses = oracle_and_noise(codebook, w, config.family, rng)
    cell = argmax_cell(codeword_scores(table, codebook, responses))
    return Decoded(cell=cell, collision=codebook.collisions(w) > 0)


def decode_competitor(
    config: SearchConfig,
    table: InfoDensityTable,
    w: int,
    rng: np.random.Generator,
) -> Decoded:
    """Exact target path; the argmax against M^d - 1 competitors resolved by their score law."""
    cells = config.cells
    x = (rng.random(config.n) < config.p).astype(int)
    k = other_ones(rng, cells - 1, config.p, config.n)
    responses = sample_responses(config.family, (x + k) / float(cells), x, rng)
    target_score = float(np.sum(table.values[x, responses]))
    pi = k / float(cells - 1) if cells > 1 else np.zeros(config.n)
    law = two_point_law(table, responses, pi)
    p_correct = correct_probability(law, target_score, w, cells)
    if rng.random() < p_correct:
        return Decoded(cell=w)
    return Decoded(cell=uniform_other_cell(rng, w, config.M, config.d))


def _trial_codebook(config: SearchConfig, rng: np.random.Generator, frozen: Codebook | None) -> Codebook:
    return frozen if frozen is not None else generate_codebook(config, rng)


def single_trial(
    config: SearchConfig,
    table: InfoDensityTable,
    target: np.ndarray,
    rng: np.random.Generator,
    frozen: Codebook | None = None,
) -> TrialOutcome:
    """One search for ``target``: quantize, query, decode and score the estimate."""
    w = gamma(quantize_point(target, config.M), config.M)
    if config.use_codebook():
        decoded = decode_codebook(config, table, _trial_codebook(config, rng, frozen), w, rng)
    else:
        decoded = decode_competitor(config, table, w, rng)
    return TrialOutcome(
        excess=excess_resolution(decoded.cell, target, config.M),
        decode_error=decoded.cell != w,
        collision=decoded.collision,
    )


def run_single_target(
    config: SearchConfig,
    target_sampler: TargetSampler = uniform_targets,
    trials: int = 1000,
    threads: int = 1,
) -> TrialStats:
    """Excess-resolution and decode-error counts of the maximum-density decoder."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    table = nominal_table(config)
    frozen = None
    if config.freeze_codebook and config.use_codebook():
        frozen = generate_codebook(config, trial_rng(config.seed, FROZEN_CODEBOOK_KEY))

    def trial(i: int) -> TrialOutcome:
        rng = trial_rng(config.seed, i)
        target = target_sampler(rng, config.d)
        return single_trial(config, table, target, rng, frozen)

    stats = TrialStats.from_outcomes(run_trials(trial, trials, threads), config.M)
    mode = "codebook" if config.use_codebook() else "competitor"
    logger.info(
        f"[sim] n={config.n} d={config.d} M={config.M} mode={mode} "
        f"rate={stats.empirical_rate:.4f}±{stats.half_width:.4f} "
        f"decode_errors={stats.decode_error_count}/{stats.trials}"
    )
    if stats.collisions:
        logger.warning(f"[sim] {stats.collisions} trials had a codeword collision with the target")
    return stats


def run_separate_search(
    config: SearchConfig,
    target_sampler: TargetSampler = uniform_targets,
    trials: int = 1000,
    threads: int = 1,
) -> TrialStats:
    """
    Search each of the d coordinates on its own with n // d queries and the
    one-dimensional procedure; a trial fails when any coordinate fails.
    """
    if config.d < 2:
        raise InvalidParameterError(f"separate search needs d >= 2, got {config.d}")
    per_axis = config.n // config.d
    if per_axis < 1:
        raise InvalidParameterError(f"n={config.n} leaves no query per dimension for d={config.d}")
    axis_config = dataclasses.replace(config, n=per_axis, d=1)
    table = nominal_table(axis_config)
    frozen = None
    if config.freeze_codebook and axis_config.use_codebook():
        frozen = generate_codebook(axis_config, trial_rng(config.seed, FROZEN_CODEBOOK_KEY))

    def trial(i: int) -> TrialOutcome:
        rng = trial_rng(config.seed, i)
        target = target_sampler(rng, config.d)
        axes = [
            single_trial(axis_config, table, target[j : j + 1], trial_rng(config.seed, i, j), frozen)
            for j in range(config.d)
        ]
        return TrialOutcome(
            excess=any(a.excess for a in axes),
            decode_error=any(a.decode_error for a in axes),
            collision=any(a.collision for a in axes),
        )

    stats = TrialStats.from_outcomes(run_trials(trial, trials, threads), config.M)
    logger.info(
        f"[sim] separate n={config.n} d={config.d} M={config.M} "
        f"rate={stats.empirical_rate:.4f}±{stats.half_width:.4f}"
    )
    return stats
