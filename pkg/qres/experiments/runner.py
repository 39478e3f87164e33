"""Experiment runner: one function per command, all writing into the spec's output directory."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from qres.asymptotics.capacity import CapacityResult, capacity, dispersion_for_eps, mi_capacity
from qres.asymptotics.multitarget import multi_target_optimize, multi_target_resolution
from qres.asymptotics.resolution import (
    adaptive_mi_resolution,
    adaptive_resolution_bound,
    adaptivity_gain_lower,
    mi_counterpart,
    phase_transition_probability,
    pm_asymptotic_rate,
    second_order_resolution,
    separate_search_resolution,
)
from qres.bounds.achievability import achievability_bound
from qres.bounds.converse import converse_bound
from qres.bounds.types import BoundReport
from qres.channels.io import parse_family, parse_family_kind
from qres.channels.models import ChannelFamily, FamilyKind, matrix_at
from qres.config.loader import save_spec
from qres.config.schema import Command, ExperimentSpec, Settings
from qres.engines.adaptive import AdaptiveConfig, run_adaptive, verify_stopping_bounds
from qres.engines.multitarget import run_multi_target
from qres.engines.nonadaptive import run_separate_search, run_single_target
from qres.errors import InvalidParameterError
from qres.experiments.output import write_json, write_rows
from qres.experiments.recipes import (
    adaptive_recipe,
    multitarget_recipe_M,
    nonadaptive_recipe_M,
    phase_transition_log_M,
    separate_recipe_M,
)
from qres.info.berry_esseen import berry_esseen_gap
from qres.info.density import density_table, moments_grid
from qres.search.space import SearchConfig, cells_from_log
from qres.utils.helpers import parse_float_list, parse_range, to_units

# Bound checks of the adaptive engine are only run with this many trials
CHECK_MIN_TRIALS = 1000

DEFAULT_N = "10:200:10"
DEFAULT_EPS_GRID = "0.05:0.5:0.05"
DEFAULT_RATE_GRID = "0.5:1.5:0.1"


@dataclass
class RunResult:
    """Rows of the main CSV, the files written and the process exit code."""

    command: Command
    header: list[str]
    rows: list[list[Any]]
    outputs: list[Path] = field(default_factory=list)
    exit_code: int = 0


@dataclass
class _Context:
    spec: ExperimentSpec
    out: Path
    extra: list[Path] = field(default_factory=list)
    exit_code: int = 0

    @property
    def units(self) -> str:
        return self.spec.units.value

    @property
    def threads(self) -> int:
        return self.spec.threads or 1

    def u(self, value: float, power: int = 1) -> float:
        return float(to_units(value, self.units, power))

    def col(self, name: str, power: int = 1) -> str:
        return f"{name}_{self.units}" + ("" if power == 1 else str(power))

    def ns(self, default: str = DEFAULT_N) -> list[int]:
        return list(self.spec.n) if self.spec.n else parse_range(default)

    def capacity(self, family: ChannelFamily) -> CapacityResult:
        return capacity(family, self.spec.grid_step, self.spec.refine_tol)


# ----------------------------------------------------------------------
# Family helpers
# ----------------------------------------------------------------------


def families(spec: ExperimentSpec) -> list[ChannelFamily]:
    """``family`` alone, or its kind instantiated at every entry of ``params``."""
    if not spec.params:
        return [parse_family(spec.family)]
    kind = parse_family_kind(spec.family)
    if kind is FamilyKind.CONSTANT:
        raise InvalidParameterError("a constant channel cannot be swept over parameters")
    return [ChannelFamily(kind=kind, parameter=v) for v in spec.params]


def _param(family: ChannelFamily) -> float | str:
    return "constant" if family.kind is FamilyKind.CONSTANT else family.parameter


def _single_family(spec: ExperimentSpec) -> ChannelFamily:
    found = families(spec)
    if len(found) != 1:
        raise InvalidParameterError(f"{spec.command.value} takes one family, got {len(found)}")
    return found[0]


# ----------------------------------------------------------------------
# Analytic commands
# ----------------------------------------------------------------------


def capacity_sweep(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """C(q) and V(q) over a q grid, plus the capacity-achieving set of each family."""
    spec = ctx.spec
    qs = np.linspace(0.0, 1.0, int(round(1.0 / spec.sweep_step)) + 1)
    rows: list[list[Any]] = []
    best: list[list[Any]] = []
    for family in families(spec):
        C, V, _ = moments_grid(family, qs)
        rows += [[_param(family), float(q), ctx.u(c), ctx.u(v, 2)] for q, c, v in zip(qs, C, V)]
        result = ctx.capacity(family)
        best += [
            [_param(family), q, ctx.u(result.C), ctx.u(v, 2)]
            for q, v in zip(result.maximizers, result.variances)
        ]
        logger.info(f"[capacity] {family.label} C={result.C:.8g} at q in {list(result.maximizers)}")
    header = ["param", "q_star", ctx.col("C"), ctx.col("V", 2)]
    ctx.extra.append(write_rows(ctx.out / "maximizers.csv", header, best))
    return ["param", "q", ctx.col("C"), ctx.col("V", 2)], rows


def rate_compare(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Second-order -log delta of the measurement-dependent channel and its independent counterpart."""
    spec = ctx.spec
    header = ["param", "n", ctx.col("md"), ctx.col("mi"), ctx.col("C_md"), ctx.col("C_mi")]
    separate = spec.separate and spec.d >= 2
    if separate:
        header.append(ctx.col("separate"))
    rows: list[list[Any]] = []
    for family in families(spec):
        md = ctx.capacity(family)
        mi = mi_capacity(family, spec.grid_step, spec.refine_tol)
        V = dispersion_for_eps(md, spec.eps)
        for n in ctx.ns():
            row = [
                _param(family),
                n,
                ctx.u(second_order_resolution(md.C, V, n, spec.d, spec.eps, spec.third_order)),
                ctx.u(mi_counterpart(family, n, spec.d, spec.eps, spec.third_order)),
                ctx.u(md.C),
                ctx.u(mi.C),
            ]
            if separate:
                V_split = dispersion_for_eps(md, spec.eps / spec.d)
                row.append(ctx.u(separate_search_resolution(md.C, V_split, n, spec.d, spec.eps)))
            rows.append(row)
    return header, rows


def gain(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    spec = ctx.spec
    eps_grid = spec.eps_grid or parse_float_list(DEFAULT_EPS_GRID)
    rows: list[list[Any]] = []
    for family in families(spec):
        result = ctx.capacity(family)
        for n in ctx.ns("100"):
            for eps in eps_grid:
                V = dispersion_for_eps(result, eps)
                rows.append([
                    _param(family),
                    n,
                    eps,
                    ctx.u(second_order_resolution(result.C, V, n, spec.d, eps)),
                    ctx.u(adaptive_resolution_bound(result.C, n, spec.d, eps)),
                    ctx.u(adaptivity_gain_lower(result.C, V, n, spec.d, eps)),
                ])
    return ["param", "n", "eps", ctx.col("nonadaptive"), ctx.col("adaptive"), ctx.col("gain")], rows


def adaptive_compare(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Adaptive bounds of the measurement-dependent and independent channels over an eps grid."""
    spec = ctx.spec
    eps_grid = spec.eps_grid or parse_float_list(DEFAULT_EPS_GRID)
    rows: list[list[Any]] = []
    for family in families(spec):
        C = ctx.capacity(family).C
        if family.kind is FamilyKind.CONSTANT:
            logger.warning("[compare] constant channel has no noiseless counterpart; pm rate is nan")
            pm = math.nan
        else:
            pm = pm_asymptotic_rate(family)
        for n in ctx.ns("100"):
            for eps in eps_grid:
                rows.append([
                    _param(family),
                    n,
                    eps,
                    ctx.u(adaptive_resolution_bound(C, n, spec.d, eps)),
                    ctx.u(adaptive_mi_resolution(family, n, spec.d, eps)),
                    ctx.u(C / (1.0 - eps)),
                    ctx.u(pm),
                ])
    header = [
        "param",
        "n",
        "eps",
        ctx.col("md_adaptive"),
        ctx.col("mi_adaptive"),
        ctx.col("md_rate"),
        ctx.col("pm_rate"),
    ]
    return header, rows


def berry_esseen(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Exact-vs-Gaussian CDF gap of the density sum against its Berry-Esseen bound."""
    spec = ctx.spec
    rows: list[list[Any]] = []
    for family in families(spec):
        q = spec.p if spec.p is not None else ctx.capacity(family).q_star
        table = density_table(q, matrix_at(family, q))
        for n in ctx.ns("10,100,1000"):
            result = berry_esseen_gap(table, n, spec.merge_tol)
            if not result.certified:
                logger.warning(f"[berry-esseen] {family.label} n={n} gap {result.max_gap:.4g} > bound")
                ctx.exit_code = 1
            rows.append([_param(family), n, q, result.max_gap, result.bound, result.certified])
    return ["param", "n", "q", "max_gap", "bound", "certified"], rows


# ----------------------------------------------------------------------
# Simulation commands
# ----------------------------------------------------------------------


def _search_config(ctx: _Context, family: ChannelFamily, n: int, M: int, p: float) -> SearchConfig:
    spec = ctx.spec
    return SearchConfig(
        n=n,
        d=spec.d,
        M=M,
        p=p,
        family=family,
        seed=spec.seed or 0,
        cell_cap=spec.cell_cap,
        freeze_codebook=spec.freeze_codebook,
        decoder_mode=spec.decoder_mode,
    )


def phase_transition(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Normal-approximation excess-resolution probability around log M = nC/d, optionally simulated."""
    spec = ctx.spec
    rate_grid = spec.rate_grid or parse_float_list(DEFAULT_RATE_GRID)
    rows: list[list[Any]] = []
    for family in families(spec):
        result = ctx.capacity(family)
        p = spec.p if spec.p is not None else result.q_star
        for n in ctx.ns("50,100,200"):
            for multiplier in rate_grid:
                log_M = phase_transition_log_M(result.C, n, spec.d, multiplier)
                V = result.V_low if spec.d * log_M < n * result.C else result.V_high
                theory = phase_transition_probability(result.C, V, n, spec.d, log_M)
                row = [_param(family), n, multiplier, ctx.u(log_M), theory]
                if spec.simulate:
                    config = _search_config(ctx, family, n, cells_from_log(log_M), p)
                    stats = run_single_target(config, trials=spec.trials, threads=ctx.threads)
                    row += [config.M, stats.empirical_rate, stats.half_width]
                rows.append(row)
    header = ["param", "n", "rate_multiplier", ctx.col("log_M"), "theory_rate"]
    if spec.simulate:
        header += ["M", "empirical_rate", "half_width"]
    return header, rows


def sim_nonadaptive(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Single-target simulation at the second-order recipe M, jointly and optionally per axis."""
    spec = ctx.spec
    family = _single_family(spec)
    result = ctx.capacity(family)
    V = dispersion_for_eps(result, spec.eps)
    p = spec.p if spec.p is not None else result.maximizer_for_eps(spec.eps)
    separate = spec.separate
    if separate and spec.d < 2:
        raise InvalidParameterError(f"separate search needs d >= 2, got d={spec.d}")
    rows: list[list[Any]] = []
    for n in ctx.ns():
        theory = second_order_resolution(result.C, V, n, spec.d, spec.eps, spec.third_order)
        M = spec.m or nonadaptive_recipe_M(result.C, V, n, spec.d, spec.eps, spec.third_order)
        stats = run_single_target(
            _search_config(ctx, family, n, M, p), trials=spec.trials, threads=ctx.threads
        )
        rows.append([
            "joint", n, M, ctx.u(math.log(M)), ctx.u(theory),
            stats.empirical_rate, stats.half_width, stats.decode_error_rate,
        ])
        if separate:
            V_split = dispersion_for_eps(result, spec.eps / spec.d)
            theory_sep = separate_search_resolution(result.C, V_split, n, spec.d, spec.eps)
            M_sep = spec.m or separate_recipe_M(result.C, V_split, n, spec.d, spec.eps)
            p_sep = spec.p if spec.p is not None else result.maximizer_for_eps(spec.eps / spec.d)
            stats = run_separate_search(
                _search_config(ctx, family, n, M_sep, p_sep), trials=spec.trials, threads=ctx.threads
            )
            rows.append([
                "separate", n, M_sep, ctx.u(math.log(M_sep)), ctx.u(theory_sep),
                stats.empirical_rate, stats.half_width, stats.decode_error_rate,
            ])
    header = [
        "procedure",
        "n",
        "M",
        ctx.col("neg_log_delta"),
        ctx.col("theory"),
        "empirical_rate",
        "half_width",
        "decode_error_rate",
    ]
    return header, rows


def sim_multitarget(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    spec = ctx.spec
    family = _single_family(spec)
    stats = multi_target_optimize(family, spec.k, spec.grid_step, spec.refine_tol)
    if not stats.certified:
        logger.warning(
            f"[multitarget] strict-inequality certificate fails (margin {stats.certificate_margin():.3g})"
        )
    p = spec.p if spec.p is not None else stats.p_star
    rows: list[list[Any]] = []
    for n in ctx.ns("50"):
        theory = multi_target_resolution(stats, n, spec.d, spec.eps, spec.third_order)
        M = spec.m or multitarget_recipe_M(stats, n, spec.d, spec.eps, spec.third_order)
        run = run_multi_target(
            _search_config(ctx, family, n, M, p),
            spec.k,
            threshold_gamma=spec.gamma,
            trials=spec.trials,
            threads=ctx.threads,
        )
        rows.append([
            spec.k, stats.t_star, n, M, ctx.u(math.log(M)), ctx.u(theory),
            run.empirical_rate, run.half_width, run.decode_error_rate,
            run.empty_decodes / run.trials, run.partial_decodes / run.trials,
        ])
    header = [
        "k",
        "t_star",
        "n",
        "M",
        ctx.col("neg_log_delta"),
        ctx.col("theory"),
        "empirical_rate",
        "half_width",
        "decode_error_rate",
        "no_tuple_rate",
        "short_tuple_rate",
    ]
    return header, rows


def sim_adaptive(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Adaptive procedure at the recipe threshold, with stopping-time checks and optional split."""
    spec = ctx.spec
    family = _single_family(spec)
    result = ctx.capacity(family)
    p = spec.p if spec.p is not None else result.q_star
    rows: list[list[Any]] = []
    histogram: list[list[Any]] = []
    checks: dict[str, Any] = {}
    a0 = density_table(p, matrix_at(family, p)).max_used_value
    for n in ctx.ns("20:60:10"):
        recipe = adaptive_recipe(n, result.C, a0, spec.eps, spec.d)
        M = spec.m or recipe.M
        lam = recipe.lam
        config = AdaptiveConfig(
            M=M,
            d=spec.d,
            p=p,
            lam=lam,
            family=family,
            seed=spec.seed or 0,
            max_steps=spec.max_steps,
            decoder_mode=spec.decoder_mode,
            prune=spec.prune,
            cell_cap=spec.cell_cap,
            eps_split=spec.eps if spec.eps_split else None,
            target_queries=recipe.target_queries,
            exact_c1=spec.exact_c1,
        )
        run = run_adaptive(config, trials=spec.trials, threads=ctx.threads)
        if spec.trials >= CHECK_MIN_TRIALS:
            report = verify_stopping_bounds(run, M, spec.d, lam, spec.slack, CHECK_MIN_TRIALS)
            checks[str(n)] = {**vars(report), "valid": report.valid, "passed": report.passed}
            if not report.passed:
                logger.warning(f"[adaptive] stopping-bound checks failed at n={n}")
                ctx.exit_code = 1
        else:
            logger.info(f"[adaptive] {spec.trials} trials < {CHECK_MIN_TRIALS}; bound checks skipped")
        split = run.split
        rows.append([
            n, M, lam, run.mean_tau, run.std_tau, ctx.u(math.log(M)),
            ctx.u(adaptive_resolution_bound(result.C, n, spec.d, spec.eps)),
            run.stats.empirical_rate, run.stats.half_width, run.stats.decode_error_rate,
            run.censored_count, run.bound_l,
            split.empirical_rate if split else math.nan,
            split.half_width if split else math.nan,
            run.split_mean_tau if run.split_mean_tau is not None else math.nan,
        ])
        if spec.histogram:
            counts = Counter(int(t) for t in run.stopping_times)
            histogram += [[n, tau, counts[tau]] for tau in sorted(counts)]
    if checks:
        ctx.extra.append(write_json(ctx.out / "stopping_checks.json", checks))
    if spec.histogram:
        ctx.extra.append(write_rows(ctx.out / "tau_histogram.csv", ["n", "tau", "count"], histogram))
    header = [
        "n",
        "M",
        "lambda",
        "mean_tau",
        "std_tau",
        ctx.col("neg_log_delta"),
        ctx.col("theory"),
        "empirical_rate",
        "half_width",
        "decode_error_rate",
        "censored",
        "tau_bound",
        "split_rate",
        "split_half_width",
        "split_mean_tau",
    ]
    return header, rows


# ----------------------------------------------------------------------
# Bounds
# ----------------------------------------------------------------------


def bounds(ctx: _Context) -> tuple[list[str], list[list[Any]]]:
    """Achievability and converse values at the recipe M, emitted as BoundReport JSON."""
    spec = ctx.spec
    family = _single_family(spec)
    result = ctx.capacity(family)
    V = dispersion_for_eps(result, spec.eps)
    p = spec.p if spec.p is not None else result.maximizer_for_eps(spec.eps)
    reports: list[BoundReport] = []
    rows: list[list[Any]] = []
    for n in ctx.ns("50,100"):
        M = spec.m or nonadaptive_recipe_M(result.C, V, n, spec.d, spec.eps, spec.third_order)
        achievability = achievability_bound(
            family,
            n,
            spec.d,
            M,
            p,
            eta=spec.eta,
            mc_samples=spec.mc_samples,
            seed=spec.seed or 0,
            threads=ctx.threads,
            merge_tol=spec.merge_tol,
        )
        converse = converse_bound(
            family,
            n,
            spec.d,
            spec.eps,
            q_grid=spec.q_grid,
            merge_tol=spec.merge_tol,
            support_cap=spec.support_cap,
        )
        notes = ["converse supremum restricted to equal-size i.i.d. query laws"]
        if achievability.clipped:
            notes.append("achievability value exceeds 1 and is clipped")
        if achievability.eta_clamped:
            notes.append(f"default eta outside [0, min(p, 1-p)); eta set to {achievability.eta:.6g}")
        row = [
            n, M, spec.eps, achievability.eps_upper, achievability.half_width,
            achievability.clipped, ctx.u(math.log(M)), ctx.u(converse.neg_log_delta_upper),
        ]
        if spec.simulate:
            stats = run_single_target(
                _search_config(ctx, family, n, M, p), trials=spec.trials, threads=ctx.threads
            )
            row += [stats.empirical_rate, stats.half_width]
            notes.append(f"simulated excess-resolution rate {stats.empirical_rate:.6g}")
        rows.append(row)
        reports.append(
            BoundReport(
                family=family.label,
                n=n,
                d=spec.d,
                M=M,
                eps=spec.eps,
                achievability=achievability,
                converse=converse,
                notes=notes,
            )
        )
    ctx.extra.append(write_json(ctx.out / "bounds.json", reports))
    header = [
        "n",
        "M",
        "eps",
        "eps_upper",
        "half_width",
        "clipped",
        ctx.col("neg_log_delta"),
        ctx.col("converse"),
    ]
    if spec.simulate:
        header += ["empirical_rate", "empirical_half_width"]
    return header, rows


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

HANDLERS: dict[Command, Callable[[_Context], tuple[list[str], list[list[Any]]]]] = {
    Command.CAPACITY_SWEEP: capacity_sweep,
    Command.RATE_COMPARE: rate_compare,
    Command.GAIN: gain,
    Command.PHASE_TRANSITION: phase_transition,
    Command.SIM_NONADAPTIVE: sim_nonadaptive,
    Command.SIM_MULTITARGET: sim_multitarget,
    Command.SIM_ADAPTIVE: sim_adaptive,
    Command.BOUNDS: bounds,
    Command.BERRY_ESSEEN: berry_esseen,
    Command.ADAPTIVE_COMPARE: adaptive_compare,
}


def output_dir(spec: ExperimentSpec, settings: Settings | None = None) -> Path:
    if spec.output:
        return Path(spec.output)
    return Path((settings or Settings()).output_dir) / spec.command.value


def run(spec: ExperimentSpec, settings: Settings | None = None) -> RunResult:
    """Run one experiment and write ``<command>.csv`` and ``spec.json`` into its output directory."""
    out = output_dir(spec, settings)
    ctx = _Context(spec=spec, out=out)
    logger.info(f"[run] {spec.command.value} family={spec.family} seed={spec.seed} -> {out}")
    header, rows = HANDLERS[spec.command](ctx)
    main = write_rows(out / f"{spec.command.value}.csv", header, rows)
    save_spec(spec, out / "spec.json")
    return RunResult(
        command=spec.command,
        header=header,
        rows=rows,
        outputs=[main, *ctx.extra, out / "spec.json"],
        exit_code=ctx.exit_code,
    )
