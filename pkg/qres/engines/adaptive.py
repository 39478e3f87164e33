"""Monte Carlo simulation of the adaptive query procedure with a density stopping rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from qres.asymptotics.capacity import EXACT_C1_CELL_CAP, capacity_at, mismatched_capacity
from qres.channels.models import ChannelFamily, matrix_at
from qres.engines.competitors import (
    AbsorptionState,
    largest_other_cell,
    other_ones,
)
from qres.engines.pool import run_trials
from qres.engines.types import AdaptiveRunStats, TrialOutcome, TrialStats, wilson_interval
from qres.errors import BudgetExceededError, InvalidParameterError
from qres.info.density import InfoDensityTable, density_table
from qres.info.sums import DEFAULT_TIE_TOL, scaled_tolerance
from qres.search.oracle import sample_responses
from qres.search.space import (
    DEFAULT_CELL_CAP,
    DecoderMode,
    TargetSampler,
    excess_resolution,
    gamma,
    quantize_point,
    uniform_targets,
)
from qres.utils.helpers import trial_rng

DEFAULT_MAX_STEPS = 10_000
# Largest M^d simulated with explicit per-cell scores in auto mode
DEFAULT_EXPLICIT_CELLS = 2**12
SPLIT_KEY = 2**32 + 1


@dataclass
class AdaptiveConfig:
    """Parameters of the adaptive procedure; ``lam`` is the stopping threshold in nats."""

    M: int
    d: int
    p: float
    lam: float
    family: ChannelFamily
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    decoder_mode: DecoderMode = DecoderMode.AUTO
    # Skip score updates of cells already at -inf
    prune: bool = False
    cell_cap: int = DEFAULT_CELL_CAP
    explicit_cells: int = DEFAULT_EXPLICIT_CELLS
    # Split wrapper: with probability (l' eps - 1)/(l' - 1) pose no query
    eps_split: float | None = None
    target_queries: float | None = None
    exact_c1: bool = False
    table: InfoDensityTable = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.decoder_mode = DecoderMode(self.decoder_mode)
        if self.M < 2 or self.d < 1:
            raise InvalidParameterError(f"need M >= 2 and d >= 1, got M={self.M}, d={self.d}")
        if not 0.0 < self.p < 1.0:
            raise InvalidParameterError(f"p must lie in (0, 1), got {self.p}")
        if not self.lam > 0.0:
            raise InvalidParameterError(f"stopping threshold must be positive, got {self.lam}")
        if self.max_steps < 1:
            raise InvalidParameterError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.eps_split is not None:
            if not 0.0 <= self.eps_split < 1.0:
                raise InvalidParameterError(f"eps_split must lie in [0, 1), got {self.eps_split}")
            if self.target_queries is None or self.target_queries <= 1.0:
                raise InvalidParameterError("eps_split needs target_queries > 1")
        self.table = density_table(self.p, matrix_at(self.family, self.p))
        if not math.isfinite(self.a0):
            raise InvalidParameterError("per-step density cap a0 is not finite")

    @property
    def cells(self) -> int:
        return self.M**self.d

    @property
    def a0(self) -> float:
        """Largest per-step density over used cells."""
        return self.table.max_used_value

    @property
    def level(self) -> float:
        return self.lam - scaled_tolerance(self.lam, DEFAULT_TIE_TOL)

    @property
    def skip_probability(self) -> float:
        if self.eps_split is None or self.target_queries is None:
            return 0.0
        queries = self.target_queries
        return max(0.0, (queries * self.eps_split - 1.0) / (queries - 1.0))

    def explicit(self) -> bool:
        if self.decoder_mode is DecoderMode.CODEBOOK:
            return True
        if self.decoder_mode is DecoderMode.COMPETITOR:
            return False
        return self.cells <= min(self.cell_cap, self.explicit_cells)

    def c1(self) -> float:
        """Mismatched capacity when exact mode is on and affordable, else C at p."""
        if self.exact_c1 and self.cells <= EXACT_C1_CELL_CAP:
            return mismatched_capacity(self.family, self.p, self.cells)
        return capacity_at(self.family, self.p).C


@dataclass
class AdaptivePath:
    """Result of one adaptive search before scoring against the target."""

    decoded: int | None
    tau: int
    true_score: float
    true_crossed: bool
    # exp(score of a wrong cell - true score) at the stopping time, averaged over wrong cells
    competitor_ratio: float = 0.0
    # Accumulated score of the true cell after each step (explicit mode only)
    true_trace: list[float] = field(default_factory=list)
    # Largest score after each step (explicit mode only)
    max_trace: list[float] = field(default_factory=list)


def explicit_path(
    config: AdaptiveConfig,
    w: int,
    rng: np.random.Generator,
    prune: bool = False,
    trace: bool = False,
) -> AdaptivePath:
    """Fresh Bernoulli(p) bits for all M^d cells at every step, all scores kept."""
    cells = config.cells
    if cells > config.cell_cap:
        raise BudgetExceededError(f"{cells} cells exceed the cell cap {config.cell_cap}")
    values = config.table.values
    level = config.level
    scores = np.zeros(cells)
    alive = np.ones(cells, dtype=bool)
    path = AdaptivePath(decoded=None, tau=config.max_steps, true_score=0.0, true_crossed=False)
    for t in range(1, config.max_steps + 1):
        bits = rng.random(cells) < config.p
        q = np.count_nonzero(bits) / cells
        z = int(bits[w - 1])
        y = int(sample_responses(config.family, np.array([q]), np.array([z]), rng)[0])
        column = values[bits.astype(np.intp), y]
        if prune:
            idx = np.flatnonzero(alive)
            scores[idx] += column[idx]
            alive[idx] = np.isfinite(scores[idx])
        else:
            scores += column
        if trace:
            path.true_trace.append(float(scores[w - 1]))
            path.max_trace.append(float(scores.max()))
        hits = np.flatnonzero(scores >= level)
        if hits.size:
            path.decoded = int(hits[-1]) + 1
            path.tau = t
            break
    path.true_score = float(scores[w - 1])
    path.true_crossed = path.true_score >= level
    others = np.delete(scores, w - 1)
    with np.errstate(over="ignore"):
        path.competitor_ratio = float(np.mean(np.exp(others - path.true_score)))
    return path


def competitor_path(config: AdaptiveConfig, w: int, rng: np.random.Generator) -> AdaptivePath:
    """
    Exact target path; the first crossings among M^d - 1 competitors drawn from their hazard.

    One wrong cell is followed bit by bit alongside the target so its score
    difference can be reported; its bits are part of the count of other ones.
    """
    cells = config.cells
    values = config.table.values
    level = config.level
    state = AbsorptionState(config.table, config.lam)
    score = 0.0
    rival = 0.0
    for t in range(1, config.max_steps + 1):
        x = int(rng.random() < config.p)
        xc = int(rng.random() < config.p)
        k = xc + float(other_ones(rng, cells - 2, config.p, 1)[0])
        q = (x + k) / float(cells)
        y = int(sample_responses(config.family, np.array([q]), np.array([x]), rng)[0])
        score += float(values[x, y])
        rival += float(values[xc, y])
        hazard = state.step(y, k / float(cells - 1))
        crossers = int(other_ones(rng, cells - 1, hazard, 1)[0]) if hazard > 0.0 else 0
        target_hit = score >= level
        if target_hit or crossers:
            decoded = w
            if crossers:
                top = largest_other_cell(rng, w, cells, crossers)
                if not (target_hit and top < w):
                    decoded = top
            return AdaptivePath(
                decoded=decoded,
                tau=t,
                true_score=score,
                true_crossed=target_hit,
                competitor_ratio=_ratio(rival, score),
            )
    return AdaptivePath(
        decoded=None,
        tau=config.max_steps,
        true_score=score,
        true_crossed=False,
        competitor_ratio=_ratio(rival, score),
    )


def _ratio(rival: float, score: float) -> float:
    if rival == -math.inf:
        return 0.0
    return math.exp(min(rival - score, 700.0))


def adaptive_trial(
    config: AdaptiveConfig, target: np.ndarray, rng: np.random.Generator
) -> TrialOutcome:
    w = gamma(quantize_point(target, config.M), config.M)
    if config.explicit():
        path = explicit_path(config, w, rng, prune=config.prune)
    else:
        path = competitor_path(config, w, rng)
    if path.decoded is None:
        return TrialOutcome(
            excess=True,
            decode_error=True,
            tau=path.tau,
            censored=True,
            competitor_ratio=path.competitor_ratio,
        )
    return TrialOutcome(
        excess=excess_resolution(path.decoded, target, config.M),
        decode_error=path.decoded != w,
        tau=path.tau,
        competitor_ratio=path.competitor_ratio,
    )


def run_adaptive(
    config: AdaptiveConfig,
    target_sampler: TargetSampler = uniform_targets,
    trials: int = 1000,
    threads: int = 1,
) -> AdaptiveRunStats:
    """Stopping times, excess-resolution and decode-error counts of the adaptive procedure."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    skip = config.skip_probability

    def trial(i: int) -> TrialOutcome:
        rng = trial_rng(config.seed, i)
        outcome = adaptive_trial(config, target_sampler(rng, config.d), rng)
        if skip > 0.0 and trial_rng(config.seed, i, SPLIT_KEY).random() < skip:
            outcome.skipped = True
        return outcome

    outcomes = run_trials(trial, trials, threads)
    raw = TrialStats.from_outcomes(outcomes, config.M)
    taus = np.array([o.tau for o in outcomes], dtype=float)
    censored = sum(o.censored for o in outcomes)
    ratios = np.array([o.competitor_ratio for o in outcomes])
    c1 = config.c1()

    split = None
    split_mean_tau = None
    skipped = sum(o.skipped for o in outcomes)
    if config.eps_split is not None:
        split = TrialStats(
            trials=raw.trials,
            excess_resolution_count=sum(o.excess or o.skipped for o in outcomes),
            decode_error_count=sum(o.decode_error or o.skipped for o in outcomes),
            resolution_delta=raw.resolution_delta,
        )
        split_mean_tau = float(np.mean(np.where([o.skipped for o in outcomes], 0.0, taus)))

    result = AdaptiveRunStats(
        stats=raw,
        stopping_times=taus,
        censored_count=censored,
        a0=config.a0,
        lam=config.lam,
        c1=c1,
        bound_l=(config.lam + config.a0) / c1 if c1 > 0.0 else math.inf,
        martingale_mean=float(ratios.mean()),
        martingale_se=float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        split=split,
        split_mean_tau=split_mean_tau,
        skipped_count=skipped,
    )
    mode = "explicit" if config.explicit() else "competitor"
    logger.info(
        f"[adaptive] M={config.M} d={config.d} lambda={config.lam:.4f} mode={mode} "
        f"mean_tau={result.mean_tau:.2f} rate={raw.empirical_rate:.4f}±{raw.half_width:.4f}"
    )
    if censored:
        logger.warning(f"[adaptive] {censored}/{trials} trials censored at {config.max_steps} steps")
    return result


# ----------------------------------------------------------------------
# Threshold choice and bound checks
# ----------------------------------------------------------------------


def choose_lambda(target_queries: float, C: float, a0: float, d: int = 1) -> tuple[float, int]:
    """
    lambda = l' C - a0 and M = max(2, floor(exp((lambda - log l') / d))).
    """
    lam = target_queries * C - a0
    if not lam > 0.0:
        raise InvalidParameterError(
            f"l'={target_queries} gives lambda={lam:.4g} <= 0; need l' > a0/C = {a0 / C:.4g}"
            if C > 0
            else "capacity must be positive to choose a threshold"
        )
    log_m = (lam - math.log(target_queries)) / d
    M = max(2, int(math.floor(math.exp(min(log_m, 700.0)))))
    return lam, M


@dataclass
class StoppingBoundReport:
    """Outcome of the stopping-time and error checks."""

    mean_tau: float
    tau_bound: float
    tau_check: bool
    error_rate: float
    error_bound: float
    error_check: bool
    censored: int
    slack: float
    martingale_mean: float
    martingale_bound: float
    martingale_check: bool

    @property
    def valid(self) -> bool:
        """Checks are meaningful only without censored trials."""
        return self.censored == 0

    @property
    def passed(self) -> bool:
        return self.valid and self.tau_check and self.error_check


def verify_stopping_bounds(
    stats: AdaptiveRunStats,
    M: int,
    d: int,
    lam: float,
    slack: float = 0.1,
    min_trials: int = 1000,
) -> StoppingBoundReport:
    """
    (a) mean tau <= (lambda + a0)/C1 (1 + slack);
    (b) decode-error rate <= (M^d - 1) e^{-lambda} (1 + slack) + 3 Wilson half-widths;
    (c) mean exp(score_competitor - score_true) at tau <= 1 + 3 standard errors.

    (c) is reported but does not gate ``passed``: scores use the channel at
    p, and with few cells the realized query size drifts from p by O(1/M^d)
    per step, which lets the ratio exceed one.
    """
    if stats.trials < min_trials:
        raise InvalidParameterError(f"bound checks need >= {min_trials} trials, got {stats.trials}")
    tau_bound = (lam + stats.a0) / stats.c1 * (1.0 + slack) if stats.c1 > 0 else math.inf
    error_rate = stats.stats.decode_error_rate
    _, half = wilson_interval(stats.stats.decode_error_count, stats.trials)
    union = math.exp(math.log(M**d - 1) - lam) if M**d > 1 else 0.0
    error_bound = union * (1.0 + slack) + 3.0 * half
    martingale_bound = 1.0 + 3.0 * stats.martingale_se
    report = StoppingBoundReport(
        mean_tau=stats.mean_tau,
        tau_bound=tau_bound,
        tau_check=stats.mean_tau <= tau_bound,
        error_rate=error_rate,
        error_bound=error_bound,
        error_check=error_rate <= error_bound,
        censored=stats.censored_count,
        slack=slack,
        martingale_mean=stats.martingale_mean,
        martingale_bound=martingale_bound,
        martingale_check=stats.martingale_mean <= martingale_bound,
    )
    if not report.valid:
        logger.warning(f"[adaptive] {report.censored} censored trials invalidate the bound checks")
    if not report.martingale_check:
        logger.info(
            f"[adaptive] competitor ratio {report.martingale_mean:.4f} above {report.martingale_bound:.4f}"
        )
    return report
