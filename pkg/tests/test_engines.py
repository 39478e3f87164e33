"""Tests for the Monte Carlo engines: non-adaptive, multi-target and adaptive."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from qres.asymptotics import capacity, dispersion_for_eps, multi_target_optimize
from qres.channels import ChannelFamily, matrix_at
from qres.engines import (
    AdaptiveConfig,
    choose_lambda,
    run_adaptive,
    run_multi_target,
    run_separate_search,
    run_single_target,
    verify_stopping_bounds,
    wilson_interval,
)
from qres.engines.adaptive import explicit_path
from qres.engines.competitors import (
    AbsorptionState,
    correct_probability,
    largest_other_cell,
    other_ones,
    uniform_below,
    uniform_other_cell,
)
from qres.engines.multitarget import covers
from qres.engines.nonadaptive import argmax_cell, codeword_scores, nominal_table
from qres.engines.pool import run_trials
from qres.engines.types import TrialOutcome, TrialStats
from qres.errors import BudgetExceededError, InvalidParameterError
from qres.experiments.recipes import (
    adaptive_recipe,
    multitarget_recipe_M,
    nonadaptive_recipe_M,
    phase_transition_log_M,
    separate_recipe_M,
)
from qres.info import SumDistribution, density_table
from qres.search import SearchConfig, cells_from_log, generate_codebook
from qres.utils.helpers import trial_rng

LOG2 = math.log(2.0)
NOISELESS = ChannelFamily(kind="bsc", parameter=0.0)


def _config(**overrides) -> SearchConfig:
    values = dict(n=40, d=1, M=8, p=0.5, family=NOISELESS, seed=1)
    values.update(overrides)
    return SearchConfig(**values)


def _adaptive(**overrides) -> AdaptiveConfig:
    values = dict(M=8, d=1, p=0.5, lam=10 * LOG2, family=NOISELESS, seed=3)
    values.update(overrides)
    return AdaptiveConfig(**values)


class TestResultTypes:
    """Wilson intervals and the trial pool."""

    def test_wilson_interval(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)
        centre, half = wilson_interval(0, 100)
        assert centre > 0.0
        assert centre - half == pytest.approx(0.0, abs=1e-12)
        centre, half = wilson_interval(50, 100)
        assert centre == pytest.approx(0.5)
        assert half == pytest.approx(0.0961, abs=1e-3)

    def test_pool_keeps_index_order(self):
        assert run_trials(lambda i: i * i, 50, threads=4) == [i * i for i in range(50)]
        assert run_trials(lambda i: i, 0) == []


class TestDecoder:
    """Scores and the argmax rule."""

    def test_argmax_ties_go_to_smallest_index(self):
        assert argmax_cell(np.array([1.0, 3.0, 3.0])) == 2
        assert argmax_cell(np.array([-np.inf, -np.inf])) == 1

    def test_scores_match_direct_sum(self):
        config = _config(n=30, M=16, p=0.3, family=ChannelFamily(kind="bsc", parameter=0.4))
        table = nominal_table(config)
        codebook = generate_codebook(config)
        responses = np.random.default_rng(4).integers(0, 2, size=config.n)
        direct = [
            np.sum(table.values[codebook.bits[:, c].astype(int), responses])
            for c in range(config.cells)
        ]
        assert_allclose(codeword_scores(table, codebook, responses), direct, rtol=1e-12)


class TestSingleTarget:
    """Excess-resolution rates of the non-adaptive procedure."""

    def test_noiseless_codebook_run_never_fails(self):
        stats = run_single_target(_config(), trials=200)
        assert stats.collisions == 0
        assert stats.empirical_rate == 0.0
        assert stats.decode_error_count == 0

    def test_noiseless_competitor_run_never_fails(self):
        stats = run_single_target(_config(decoder_mode="competitor"), trials=200)
        assert stats.empirical_rate == 0.0

    def test_competitor_mode_handles_astronomical_cell_counts(self):
        config = _config(n=200, d=2, M=10**17, decoder_mode="auto")
        assert not config.use_codebook()
        stats = run_single_target(config, trials=50)
        assert stats.resolution_delta == pytest.approx(1e-17)
        assert stats.empirical_rate == 0.0

    def test_thread_count_does_not_change_results(self):
        config = _config(n=30, M=16, family=ChannelFamily(kind="bsc", parameter=0.4))
        one = run_single_target(config, trials=100, threads=1)
        four = run_single_target(config, trials=100, threads=4)
        assert one == four

    def test_frozen_codebook(self):
        stats = run_single_target(_config(freeze_codebook=True), trials=50)
        assert stats.empirical_rate == 0.0

    def test_trials_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            run_single_target(_config(), trials=0)

    def test_separate_search(self):
        stats = run_separate_search(_config(n=60, d=2), trials=100)
        assert stats.empirical_rate == 0.0
        with pytest.raises(InvalidParameterError):
            run_separate_search(_config(), trials=10)


class TestCompetitors:
    """Helpers of the competitor-law mode."""

    def test_other_ones(self):
        rng = trial_rng(0)
        assert_array_equal(other_ones(rng, 0, 0.5, 3), 0.0)
        assert_array_equal(other_ones(rng, 10, 0.0, 3), 0.0)
        huge = other_ones(rng, 10**30, 0.5, 1000)
        assert abs(huge.mean() / 10**30 - 0.5) < 1e-6
        rare = other_ones(rng, 10**30, 1e-28, 2000)
        assert rare.mean() == pytest.approx(100.0, rel=0.05)

    def test_uniform_other_cell_skips_target(self):
        rng = trial_rng(1)
        draws = {uniform_other_cell(rng, 2, 3, 1) for _ in range(200)}
        assert draws == {1, 3}
        big = uniform_other_cell(rng, 5, 2**40, 2)
        assert 1 <= big <= 2**80 and big != 5

    def test_largest_other_cell(self):
        rng = trial_rng(2)
        for _ in range(100):
            k = largest_other_cell(rng, 4, 10, 3)
            assert 3 <= k <= 10 and k != 4

    def test_uniform_below_handles_huge_bounds(self):
        rng = trial_rng(3)
        assert {uniform_below(rng, 3) for _ in range(100)} == {0, 1, 2}
        upper = 2**70 + 3
        draws = np.array([uniform_below(rng, upper) / upper for _ in range(4000)])
        assert draws.min() >= 0.0 and draws.max() < 1.0
        assert draws.mean() == pytest.approx(0.5, abs=0.02)
        assert np.mean(draws < 0.25) == pytest.approx(0.25, abs=0.03)

    def test_uniform_other_cell_beyond_int64(self):
        rng = trial_rng(4)
        M = 2**65 + 1
        for _ in range(50):
            j = uniform_other_cell(rng, 7, M, 2)
            assert 1 <= j <= M**2 and j != 7
        rows = {(uniform_other_cell(rng, 7, M, 2) - 1) // M for _ in range(50)}
        assert len(rows) > 40

    def test_largest_other_cell_beyond_int64(self):
        rng = trial_rng(6)
        cells = 2**130
        few = [largest_other_cell(rng, 1, cells, 3) for _ in range(200)]
        assert all(1 < k <= cells for k in few)
        # the largest of three uniforms has mean 3/4
        assert np.mean([k / cells for k in few]) == pytest.approx(0.75, abs=0.05)
        many = largest_other_cell(rng, 1, cells, 10_000)
        assert 0.99 * cells < many <= cells

    def test_competitor_mode_beyond_int64(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        config = _config(n=20, M=2**70, p=0.3, family=family)
        assert not config.use_codebook()
        stats = run_single_target(config, trials=20)
        assert stats.empirical_rate >= 0.9

    def test_correct_probability(self):
        law = SumDistribution(n=1, support=np.array([0.0, 1.0]), probs=np.array([0.5, 0.5]))
        # target first in index order: competitors win only strictly
        assert correct_probability(law, 1.0, 1, 3) == pytest.approx(1.0)
        # target last: ties count against it
        assert correct_probability(law, 1.0, 3, 3) == pytest.approx(0.25)
        assert correct_probability(law, 0.0, 1, 3) == pytest.approx(0.25)

    def test_absorption_hazard_for_noiseless_channel(self):
        table = nominal_table(_config())
        state = AbsorptionState(table, 2 * LOG2)
        assert state.step(1, 0.5) == 0.0
        # a competitor matching both answers crosses with probability 1/4
        assert state.step(0, 0.5) == pytest.approx(0.25)


class TestMultiTarget:
    """Simultaneous search with the OR oracle."""

    def test_noiseless_two_targets(self):
        stats = run_multi_target(_config(n=40, p=0.3), k=2, trials=100)
        assert stats.empirical_rate <= 0.05

    def test_tuple_cap(self):
        with pytest.raises(BudgetExceededError):
            run_multi_target(_config(M=64), k=2, trials=1, tuple_cap=100)

    def test_coincident_targets_count_as_covered(self):
        estimates = np.array([[0.55]])
        targets = np.array([[0.52], [0.58]])
        assert covers(estimates, targets, 10)
        assert not covers(np.array([[0.15]]), targets, 10)
        assert not covers(np.empty((0, 1)), targets, 10)

    def test_missed_decodes_are_counted(self):
        outcomes = [
            TrialOutcome(excess=True, decode_error=True, empty=True),
            TrialOutcome(excess=True, decode_error=True, partial=True),
            TrialOutcome(excess=False, decode_error=False),
        ]
        stats = TrialStats.from_outcomes(outcomes, 8)
        assert (stats.empty_decodes, stats.partial_decodes) == (1, 1)

    def test_short_run_reports_its_misses(self):
        # two noiseless answers cannot pin two cells out of 64
        stats = run_multi_target(_config(n=2, M=64, p=0.3), k=2, trials=50)
        assert stats.empty_decodes + stats.partial_decodes > 0
        assert stats.empty_decodes + stats.partial_decodes <= stats.excess_resolution_count


class TestAdaptive:
    """Variable-length search with the density stopping rule."""

    def test_noiseless_stops_after_threshold_bits(self):
        result = run_adaptive(_adaptive(), trials=200)
        assert_array_equal(result.stopping_times, 10)
        assert result.censored_count == 0
        assert result.a0 == pytest.approx(LOG2)
        assert result.c1 == pytest.approx(LOG2)

    def test_noiseless_bounds_hold(self):
        config = _adaptive()
        result = run_adaptive(config, trials=1000)
        report = verify_stopping_bounds(result, config.M, config.d, config.lam)
        assert report.valid
        assert report.passed
        assert report.martingale_check

    def test_competitor_ratio_in_explicit_mode(self):
        # an erasure channel keeps every wrong cell's ratio at 0 or 1
        family = ChannelFamily(kind="bec", parameter=0.5)
        config = _adaptive(M=16, family=family, lam=6.0, decoder_mode="codebook")
        result = run_adaptive(config, trials=1000)
        assert 0.0 < result.martingale_mean <= 1.0
        report = verify_stopping_bounds(result, config.M, config.d, config.lam)
        assert report.martingale_bound == pytest.approx(1.0 + 3.0 * result.martingale_se)
        assert report.martingale_check

    def test_competitor_ratio_in_competitor_mode(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        q = capacity(family).q_star
        config = _adaptive(M=2**20, p=q, family=family, lam=12.0, decoder_mode="competitor")
        result = run_adaptive(config, trials=1000)
        assert result.martingale_mean > 0.0
        assert result.martingale_mean <= 1.0 + 3.0 * result.martingale_se
        assert verify_stopping_bounds(result, config.M, config.d, config.lam).martingale_check

    def test_trace_follows_score_increments(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        config = _adaptive(M=16, p=0.3, family=family, lam=4.0, decoder_mode="codebook")
        steps = config.table.values[np.isfinite(config.table.values)]
        for seed in range(5):
            path = explicit_path(config, 5, trial_rng(9, seed), trace=True)
            assert len(path.true_trace) == len(path.max_trace) == path.tau
            increments = np.diff(path.true_trace, prepend=0.0)
            assert np.all(np.min(np.abs(increments[:, None] - steps[None, :]), axis=1) <= 1e-9)
            assert path.true_trace[-1] == pytest.approx(path.true_score)
            assert np.all(np.array(path.max_trace) >= np.array(path.true_trace))
            # stops at the first step where some score reaches the threshold
            assert all(m < config.level for m in path.max_trace[:-1])
            assert path.max_trace[-1] >= config.level
            assert path.true_crossed == (path.true_score >= config.level)

    def test_bound_checks_need_enough_trials(self):
        result = run_adaptive(_adaptive(), trials=10)
        with pytest.raises(InvalidParameterError):
            verify_stopping_bounds(result, 8, 1, 10 * LOG2)

    def test_tiny_threshold_stops_at_once(self):
        result = run_adaptive(_adaptive(lam=1e-3), trials=50)
        assert_array_equal(result.stopping_times, 1)

    def test_censoring_invalidates_checks(self):
        config = _adaptive(lam=100 * LOG2, max_steps=5)
        result = run_adaptive(config, trials=1000)
        assert result.censored_count == 1000
        report = verify_stopping_bounds(result, config.M, config.d, config.lam)
        assert not report.valid
        assert not report.passed

    def test_pruning_does_not_change_the_path(self):
        config = _adaptive()
        plain = explicit_path(config, 3, trial_rng(5), prune=False)
        pruned = explicit_path(config, 3, trial_rng(5), prune=True)
        assert (plain.decoded, plain.tau) == (pruned.decoded, pruned.tau)

    def test_explicit_mode_respects_cell_cap(self):
        config = _adaptive(M=64, decoder_mode="codebook", cell_cap=32)
        with pytest.raises(BudgetExceededError):
            explicit_path(config, 1, trial_rng(0))

    def test_competitor_mode_stopping_time(self):
        config = _adaptive(M=1000, lam=25 * LOG2, decoder_mode="competitor")
        result = run_adaptive(config, trials=100)
        assert_array_equal(result.stopping_times, 25)

    def test_split_wrapper(self):
        config = _adaptive(eps_split=0.2, target_queries=20.0)
        assert config.skip_probability == pytest.approx(3.0 / 19.0)
        result = run_adaptive(config, trials=1000)
        assert 100 <= result.skipped_count <= 220
        assert result.split.excess_resolution_count >= result.stats.excess_resolution_count
        assert result.split_mean_tau < result.mean_tau

    def test_split_wrapper_needs_target_queries(self):
        with pytest.raises(InvalidParameterError):
            _adaptive(eps_split=0.2)

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            _adaptive(p=0.0)
        with pytest.raises(InvalidParameterError):
            _adaptive(lam=0.0)

    def test_choose_lambda(self):
        lam, M = choose_lambda(100, LOG2, LOG2)
        assert lam == pytest.approx(99 * LOG2)
        assert M == pytest.approx(2.0**99 / 100, rel=1e-12)
        with pytest.raises(InvalidParameterError):
            choose_lambda(0.5, LOG2, LOG2)


@pytest.mark.slow
class TestReproductions:
    """Monte Carlo runs against the second-order predictions."""

    def test_nonadaptive_rate_near_target(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        result = capacity(family)
        n, eps = 40, 0.1
        M = nonadaptive_recipe_M(result.C, dispersion_for_eps(result, eps), n, 1, eps)
        config = SearchConfig(n=n, d=1, M=M, p=result.q_star, family=family, seed=7)
        stats = run_single_target(config, trials=2000, threads=4)
        assert 0.02 <= stats.empirical_rate <= 0.25

    def test_phase_transition(self):
        family = ChannelFamily(kind="bsc", parameter=0.2)
        result = capacity(family)
        n, d = 200, 2
        rates = []
        for multiplier in (0.9, 1.1):
            M = cells_from_log(phase_transition_log_M(result.C, n, d, multiplier))
            config = SearchConfig(n=n, d=d, M=M, p=result.q_star, family=family, seed=11)
            rates.append(run_single_target(config, trials=1000, threads=4).empirical_rate)
        # log M at 1.1 nC/d puts M past 2^64 per axis
        assert cells_from_log(phase_transition_log_M(result.C, n, d, 1.1)) > 2**64
        # n = 200 is short of the sharp 0.1 / 0.9 split; both sides sit where
        # the second-order estimate with its -1/2 log n term puts them
        assert rates[0] <= 0.2
        assert rates[1] >= 0.5
        assert rates[1] - rates[0] > 0.4

    def test_two_target_search(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        stats = multi_target_optimize(family, 2)
        assert stats.t_star == 2
        n = 50
        M = multitarget_recipe_M(stats, n, 1, 0.1)
        config = SearchConfig(n=n, d=1, M=M, p=stats.p_star, family=family, seed=13)
        result = run_multi_target(config, k=2, trials=1000, threads=4)
        # every |J| < t test of the true pair is another way to miss it at
        # n = 50, so the rate sits above eps
        assert result.empirical_rate <= 0.45
        misses = result.empty_decodes + result.partial_decodes
        assert misses >= 0.7 * result.excess_resolution_count

    def test_joint_search_beats_separate_search(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        result = capacity(family)
        n, d, eps = 60, 2, 0.1
        joint_M = nonadaptive_recipe_M(result.C, dispersion_for_eps(result, eps), n, d, eps)
        separate_M = separate_recipe_M(result.C, dispersion_for_eps(result, eps / d), n, d, eps)
        assert joint_M > 4 * separate_M
        joint = run_single_target(
            SearchConfig(n=n, d=d, M=joint_M, p=result.maximizer_for_eps(eps), family=family, seed=19),
            trials=2000,
            threads=4,
        )
        separate = run_separate_search(
            SearchConfig(n=n, d=d, M=separate_M, p=result.maximizer_for_eps(eps / d), family=family, seed=19),
            trials=2000,
            threads=4,
        )
        # finer cells at no worse an error rate
        assert joint.resolution_delta < separate.resolution_delta
        assert joint.empirical_rate <= separate.empirical_rate + 3 * max(joint.half_width, separate.half_width)

    def test_adaptive_queries_average_near_n(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        result = capacity(family)
        p = result.q_star
        a0 = density_table(p, matrix_at(family, p)).max_used_value
        for n in (20, 40, 60):
            recipe = adaptive_recipe(n, result.C, a0, 0.1)
            config = AdaptiveConfig(
                M=recipe.M,
                d=1,
                p=p,
                lam=recipe.lam,
                family=family,
                seed=23,
                eps_split=0.1,
                target_queries=recipe.target_queries,
            )
            run = run_adaptive(config, trials=2000, threads=4)
            assert run.censored_count == 0
            assert abs(run.mean_tau / n - 1.0) <= 0.15
            assert abs(run.split_mean_tau / n - 1.0) <= 0.15
            assert run.split_mean_tau < run.mean_tau
            assert run.split.empirical_rate <= 0.25
            assert verify_stopping_bounds(run, config.M, 1, config.lam).tau_check
