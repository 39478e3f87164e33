"""CLI commands for qres."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, NoReturn

import typer
from loguru import logger
from rich.console import Console

from qres import __version__
from qres.config.schema import Command

app = typer.Typer(
    name="qres",
    help="qres - resolution of noisy twenty-questions search over measurement-dependent channels",
    no_args_is_help=True,
)
console = Console()

EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2


def version_callback(value: bool) -> None:
    if value:
        console.print(f"qres v{__version__}")
        raise typer.Exit()


def configure_logging(level: str) -> None:
    """Route loguru to stderr at ``level``."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <7} | {message}")


@app.callback()
def main(
    version: bool = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
    ),
    log_level: str | None = typer.Option(
        None,
        "--log-level",
        help="Log level (default: QRES_LOG_LEVEL or WARNING).",
    ),
) -> None:
    """qres entrypoint."""
    del version
    from qres.config.schema import Settings

    configure_logging(log_level or Settings().log_level)


# ----------------------------------------------------------------------
# Shared options
# ----------------------------------------------------------------------


def _spec_option() -> Any:
    return typer.Option(None, "--spec", help="JSON experiment spec; flags override its fields.")


def _family_option() -> Any:
    return typer.Option(
        None,
        "--family",
        "-f",
        help="Channel family: bsc:0.4, bec:1, z:0.3, constant:<path> (kind only with --params).",
    )


def _params_option() -> Any:
    return typer.Option(None, "--params", help="Family parameters, e.g. 0.2,0.5,1.0 or 0:1:0.1.")


def _n_option() -> Any:
    return typer.Option(None, "--n", help="Query counts, e.g. 60, 20,40 or 20:80:10.")


def _d_option() -> Any:
    return typer.Option(None, "--d", help="Dimension of the target space.")


def _eps_option() -> Any:
    return typer.Option(None, "--eps", help="Target excess-resolution probability.")


def _eps_grid_option() -> Any:
    return typer.Option(None, "--eps-grid", help="Excess-resolution probabilities, e.g. 0.05:0.5:0.05.")


def _trials_option() -> Any:
    return typer.Option(None, "--trials", help="Monte Carlo trials per point.")


def _m_option() -> Any:
    return typer.Option(None, "--M", "--m", help="Cells per axis, overriding the recipe.")


def _p_option() -> Any:
    return typer.Option(None, "--p", help="Query size / codeword density (default: capacity-achieving).")


def _third_order_option() -> Any:
    return typer.Option(None, "--third-order", help="none | minusHalfLog | plusLog")


def _decoder_option() -> Any:
    return typer.Option(None, "--decoder-mode", help="auto | codebook | competitor")


def _seed_option() -> Any:
    return typer.Option(None, "--seed", help="Base seed (default: QRES_SEED, then 0).")


def _threads_option() -> Any:
    return typer.Option(None, "--threads", help="Worker threads for trials.")


def _output_option() -> Any:
    return typer.Option(None, "--output", "-o", help="Output directory.")


def _units_option() -> Any:
    return typer.Option(None, "--units", help="nats | bits")


def _ints(text: str | None) -> list[int] | None:
    from qres.errors import InvalidParameterError
    from qres.utils.helpers import parse_range

    try:
        return parse_range(text) if text else None
    except InvalidParameterError as e:
        _fail("invalid_parameter", str(e))


def _floats(text: str | None) -> list[float] | None:
    from qres.errors import InvalidParameterError
    from qres.utils.helpers import parse_float_list

    try:
        return parse_float_list(text) if text else None
    except InvalidParameterError as e:
        _fail("invalid_parameter", str(e))


# ----------------------------------------------------------------------
# Execution and error reporting
# ----------------------------------------------------------------------


def _fail(kind: str, message: str, details: list[Any] | None = None) -> NoReturn:
    typer.echo(json.dumps({"error": kind, "message": message, "details": details or []}))
    raise typer.Exit(EXIT_INVALID)


def _execute(command: Command | None, spec_file: Path | None, overrides: dict[str, Any]) -> None:
    """Resolve the spec, run it and report; exit 2 on invalid input, 1 on a failed check."""
    from pydantic import ValidationError

    from qres.config.loader import load_spec, resolve_spec
    from qres.config.schema import Settings
    from qres.errors import InvalidParameterError, QresError
    from qres.experiments.output import print_summary
    from qres.experiments.runner import run

    try:
        file_data = load_spec(spec_file) if spec_file else {}
        if command is not None:
            overrides["command"] = command.value
        settings = Settings()
        spec = resolve_spec(file_data, overrides, settings)
        result = run(spec, settings)
    except ValidationError as e:
        details = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in e.errors()
        ]
        _fail("validation_error", "experiment spec failed validation", details)
    except InvalidParameterError as e:
        _fail("invalid_parameter", str(e))
    except QresError as e:
        _fail(type(e).__name__, str(e))

    print_summary(console, spec.command.value, result.header, result.rows)
    for path in result.outputs:
        console.print(f"[green]OK[/green] Wrote [cyan]{path}[/cyan]")
    if result.exit_code:
        console.print("[red]One or more checks failed.[/red]")
        raise typer.Exit(EXIT_CHECK_FAILED)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


@app.command("run")
def run_spec(
    spec: Path = typer.Option(..., "--spec", help="JSON experiment spec naming its command."),
    output: str | None = _output_option(),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
) -> None:
    """Run the experiment described by a spec file."""
    _execute(None, spec, {"output": output, "seed": seed, "threads": threads})


@app.command("capacity-sweep")
def capacity_sweep(
    family: str | None = _family_option(),
    params: str | None = _params_option(),
    sweep_step: float | None = typer.Option(None, "--sweep-step", help="q grid step of the sweep."),
    grid_step: float | None = typer.Option(None, "--grid-step", help="Maximizer search grid step."),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """C(q) and V(q) over a q grid for each family parameter."""
    _execute(
        Command.CAPACITY_SWEEP,
        spec,
        {
            "family": family,
            "params": _floats(params),
            "sweep_step": sweep_step,
            "grid_step": grid_step,
            "units": units,
            "output": output,
        },
    )


@app.command("rate-compare")
def rate_compare(
    family: str | None = _family_option(),
    params: str | None = _params_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps: float | None = _eps_option(),
    third_order: str | None = _third_order_option(),
    separate: bool | None = typer.Option(
        None, "--separate/--no-separate", help="Add the per-axis search column (d >= 2)."
    ),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Second-order resolution against the measurement-independent counterpart."""
    _execute(
        Command.RATE_COMPARE,
        spec,
        {
            "family": family,
            "params": _floats(params),
            "n": _ints(n),
            "d": d,
            "eps": eps,
            "third_order": third_order,
            "separate": separate,
            "units": units,
            "output": output,
        },
    )


@app.command("gain")
def gain(
    family: str | None = _family_option(),
    params: str | None = _params_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps_grid: str | None = _eps_grid_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Lower bound on the gain of adaptive over non-adaptive querying."""
    _execute(
        Command.GAIN,
        spec,
        {
            "family": family,
            "params": _floats(params),
            "n": _ints(n),
            "d": d,
            "eps_grid": _floats(eps_grid),
            "units": units,
            "output": output,
        },
    )


@app.command("adaptive-compare")
def adaptive_compare(
    family: str | None = _family_option(),
    params: str | None = _params_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps_grid: str | None = _eps_grid_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Adaptive resolution of the measurement-dependent and independent channels."""
    _execute(
        Command.ADAPTIVE_COMPARE,
        spec,
        {
            "family": family,
            "params": _floats(params),
            "n": _ints(n),
            "d": d,
            "eps_grid": _floats(eps_grid),
            "units": units,
            "output": output,
        },
    )


@app.command("phase-transition")
def phase_transition(
    family: str | None = _family_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    rate_grid: str | None = typer.Option(
        None, "--rate-grid", help="log M as multiples of nC/d, e.g. 0.5:1.5:0.1."
    ),
    simulate: bool | None = typer.Option(None, "--simulate/--no-simulate", help="Add simulated rates."),
    trials: int | None = _trials_option(),
    p: float | None = _p_option(),
    decoder_mode: str | None = _decoder_option(),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Excess-resolution probability on both sides of the critical rate C/d."""
    _execute(
        Command.PHASE_TRANSITION,
        spec,
        {
            "family": family,
            "n": _ints(n),
            "d": d,
            "rate_grid": _floats(rate_grid),
            "simulate": simulate,
            "trials": trials,
            "p": p,
            "decoder_mode": decoder_mode,
            "seed": seed,
            "threads": threads,
            "units": units,
            "output": output,
        },
    )


@app.command("sim-nonadaptive")
def sim_nonadaptive(
    family: str | None = _family_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps: float | None = _eps_option(),
    trials: int | None = _trials_option(),
    m: int | None = _m_option(),
    p: float | None = _p_option(),
    third_order: str | None = _third_order_option(),
    decoder_mode: str | None = _decoder_option(),
    freeze_codebook: bool | None = typer.Option(
        None, "--freeze-codebook/--fresh-codebook", help="One codebook for all trials."
    ),
    separate: bool | None = typer.Option(
        None, "--separate/--no-separate", help="Also simulate per-axis search."
    ),
    cell_cap: int | None = typer.Option(None, "--cell-cap", help="Largest explicit M^d."),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Simulate the non-adaptive single-target procedure."""
    _execute(
        Command.SIM_NONADAPTIVE,
        spec,
        {
            "family": family,
            "n": _ints(n),
            "d": d,
            "eps": eps,
            "trials": trials,
            "m": m,
            "p": p,
            "third_order": third_order,
            "decoder_mode": decoder_mode,
            "freeze_codebook": freeze_codebook,
            "separate": separate,
            "cell_cap": cell_cap,
            "seed": seed,
            "threads": threads,
            "units": units,
            "output": output,
        },
    )


@app.command("sim-multitarget")
def sim_multitarget(
    family: str | None = _family_option(),
    k: int | None = typer.Option(None, "--k", help="Number of targets."),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps: float | None = _eps_option(),
    trials: int | None = _trials_option(),
    m: int | None = _m_option(),
    p: float | None = _p_option(),
    gamma: float | None = typer.Option(None, "--gamma", help="Threshold slack (default 1/2 log n)."),
    third_order: str | None = _third_order_option(),
    freeze_codebook: bool | None = typer.Option(
        None, "--freeze-codebook/--fresh-codebook", help="One codebook for all trials."
    ),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Simulate simultaneous search for k targets with the threshold decoder."""
    _execute(
        Command.SIM_MULTITARGET,
        spec,
        {
            "family": family,
            "k": k,
            "n": _ints(n),
            "d": d,
            "eps": eps,
            "trials": trials,
            "m": m,
            "p": p,
            "gamma": gamma,
            "third_order": third_order,
            "freeze_codebook": freeze_codebook,
            "seed": seed,
            "threads": threads,
            "units": units,
            "output": output,
        },
    )


@app.command("sim-adaptive")
def sim_adaptive(
    family: str | None = _family_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    eps: float | None = _eps_option(),
    trials: int | None = _trials_option(),
    m: int | None = _m_option(),
    p: float | None = _p_option(),
    decoder_mode: str | None = _decoder_option(),
    eps_split: bool | None = typer.Option(
        None, "--eps-split/--no-eps-split", help="Skip all queries with the splitting probability."
    ),
    exact_c1: bool | None = typer.Option(
        None, "--exact-c1/--nominal-c1", help="Exact mismatched capacity in the stopping bound."
    ),
    max_steps: int | None = typer.Option(None, "--max-steps", help="Censoring horizon."),
    slack: float | None = typer.Option(None, "--slack", help="Relative slack of the bound checks."),
    prune: bool | None = typer.Option(None, "--prune/--no-prune", help="Skip disqualified cells."),
    histogram: bool | None = typer.Option(
        None, "--histogram/--no-histogram", help="Write the stopping-time histogram."
    ),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Simulate the adaptive procedure and check its stopping-time bounds."""
    _execute(
        Command.SIM_ADAPTIVE,
        spec,
        {
            "family": family,
            "n": _ints(n),
            "d": d,
            "eps": eps,
            "trials": trials,
            "m": m,
            "p": p,
            "decoder_mode": decoder_mode,
            "eps_split": eps_split,
            "exact_c1": exact_c1,
            "max_steps": max_steps,
            "slack": slack,
            "prune": prune,
            "histogram": histogram,
            "seed": seed,
            "threads": threads,
            "units": units,
            "output": output,
        },
    )


@app.command("bounds")
def bounds(
    family: str | None = _family_option(),
    n: str | None = _n_option(),
    d: int | None = _d_option(),
    m: int | None = _m_option(),
    eps: float | None = _eps_option(),
    p: float | None = _p_option(),
    eta: float | None = typer.Option(None, "--eta", help="Change-of-measure window."),
    mc_samples: int | None = typer.Option(None, "--mc-samples", help="Outer Monte Carlo samples."),
    q_grid: str | None = typer.Option(None, "--q-grid", help="Query sizes searched by the converse."),
    simulate: bool | None = typer.Option(
        None, "--simulate/--no-simulate", help="Add the matched simulated rate."
    ),
    trials: int | None = _trials_option(),
    seed: int | None = _seed_option(),
    threads: int | None = _threads_option(),
    units: str | None = _units_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Finite-length achievability and converse bounds as BoundReport JSON."""
    _execute(
        Command.BOUNDS,
        spec,
        {
            "family": family,
            "n": _ints(n),
            "d": d,
            "m": m,
            "eps": eps,
            "p": p,
            "eta": eta,
            "mc_samples": mc_samples,
            "q_grid": _floats(q_grid),
            "simulate": simulate,
            "trials": trials,
            "seed": seed,
            "threads": threads,
            "units": units,
            "output": output,
        },
    )


@app.command("berry-esseen")
def berry_esseen(
    family: str | None = _family_option(),
    params: str | None = _params_option(),
    n: str | None = _n_option(),
    p: float | None = _p_option(),
    output: str | None = _output_option(),
    spec: Path | None = _spec_option(),
) -> None:
    """Exact-vs-Gaussian CDF gap of the density sum against the Berry-Esseen bound."""
    _execute(
        Command.BERRY_ESSEEN,
        spec,
        {
            "family": family,
            "params": _floats(params),
            "n": _ints(n),
            "p": p,
            "output": output,
        },
    )
