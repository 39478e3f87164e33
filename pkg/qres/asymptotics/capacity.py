"""Capacity and dispersion of measurement-dependent channels."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.optimize import brentq
from scipy.special import xlogy
from scipy.stats import binom

from qres.channels.models import ChannelFamily, FamilyKind, entries_at, matrix_at
from qres.errors import BudgetExceededError, InvalidParameterError
from qres.info.density import InfoStats, density_table, moments_grid, stats

DEFAULT_GRID_STEP = 1e-4
DEFAULT_REFINE_TOL = 1e-10
MAXIMIZER_TOL = 1e-9
# Grid points this close to the grid maximum belong to a candidate hump
SCREEN_TOL = 1e-6
EXACT_C1_CELL_CAP = 2**16

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


@dataclass(frozen=True)
class CapacityResult:
    """Maximum of q -> C(q) and the capacity-achieving set."""

    C: float
    maximizers: tuple[float, ...]
    variances: tuple[float, ...]
    T_at: tuple[float, ...]

    @property
    def V_low(self) -> float:
        return min(self.variances)

    @property
    def V_high(self) -> float:
        return max(self.variances)

    @property
    def q_star(self) -> float:
        return self.maximizers[0]

    def maximizer_for_eps(self, eps: float) -> float:
        """Smallest maximizer whose variance is the one selected for ``eps``."""
        target = dispersion_for_eps(self, eps)
        for q, v in zip(self.maximizers, self.variances):
            if v == target:
                return q
        return self.q_star

    def third_moment_for_eps(self, eps: float) -> float:
        q = self.maximizer_for_eps(eps)
        return self.T_at[self.maximizers.index(q)]


# ----------------------------------------------------------------------
# Objective helpers
# ----------------------------------------------------------------------


def capacity_at(family: ChannelFamily, q: float) -> InfoStats:
    """Moments of iota_{q,q} (for a constant family: input probability q)."""
    return stats(density_table(q, matrix_at(family, q)))


def capacity_curve(family: ChannelFamily, qs: np.ndarray) -> np.ndarray:
    """C(q) over a grid."""
    mean, _, _ = moments_grid(family, qs)
    return mean


def information_slope(
    family: ChannelFamily,
    p: float,
    q: float,
    dp: float = 1.0,
    dq: float = 1.0,
) -> float:
    """Directional derivative of I(Bern(p); P^q) along (dp, dq)."""
    base, slope = family.affine_parts()
    w = base + slope * q
    px = np.array([1.0 - p, p])
    py = px @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        log_py = np.where(py > 0.0, np.log(py), 0.0)
        log_w = np.where(w > 0.0, np.log(w), -np.inf)
        d_input = float(np.sum(xlogy(w[1], w[1]) - xlogy(w[0], w[0])) - np.dot(w[1] - w[0], log_py))
        b_log_w = np.where(slope != 0.0, slope * log_w, 0.0)
        d_query = float(px @ b_log_w.sum(axis=1) - np.dot(px @ slope, log_py))
    return dp * d_input + dq * d_query


def golden_section_max(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> tuple[float, float]:
    """
    Golden-section search for the maximum of a unimodal f on [a, b].

    Ties shrink toward the left end, so plateaus resolve to their smallest point.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    # Required steps to achieve tolerance
    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(steps - 1):
        if yc >= yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    return (c, yc) if yc >= yd else (d, yd)


def _hump_runs(values: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive grid indices within the screen of the grid maximum."""
    top = float(np.max(values))
    near = values >= top - SCREEN_TOL * max(1.0, abs(top))
    idx = np.flatnonzero(near)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    return list(zip(starts.tolist(), ends.tolist()))


def maximize_scan(
    xs: np.ndarray,
    grid_values: np.ndarray,
    objective: Callable[[float], float],
    refine_tol: float,
    slope: Callable[[float], float] | None = None,
    keep_tol: float = MAXIMIZER_TOL,
) -> list[tuple[float, float]]:
    """
    Grid scan plus golden-section refinement of every hump near the grid
    maximum, with an optional root polish on ``slope``.

    Returns the (x, f(x)) pairs within ``keep_tol`` of the best, sorted by x
    and deduplicated at spacing max(10 * refine_tol, 1e-6).
    """
    last = xs.size - 1
    refined: list[tuple[float, float]] = []
    for start, end in _hump_runs(grid_values):
        lo = float(xs[max(start - 1, 0)])
        hi = float(xs[min(end + 1, last)])
        peak = start + int(np.argmax(grid_values[start : end + 1]))
        candidates = [(float(xs[peak]), objective(float(xs[peak])))]
        candidates.append(golden_section_max(objective, lo, hi, refine_tol))
        best_f = max(f for _, f in candidates)

        root = None
        if slope is not None and hi > lo:
            s_lo, s_hi = slope(lo), slope(hi)
            if np.isfinite(s_lo) and np.isfinite(s_hi) and s_lo > 0.0 > s_hi:
                x_root = brentq(slope, lo, hi, xtol=1e-15)
                root = (x_root, objective(x_root))
        if root is not None and root[1] >= best_f - 1e-13:
            refined.append(root)
        else:
            refined.append(min((c for c in candidates if c[1] == best_f), key=lambda c: c[0]))

    top = max(f for _, f in refined)
    kept = sorted((x, f) for x, f in refined if top - f <= keep_tol)
    spacing = max(10.0 * refine_tol, 1e-6)
    result: list[tuple[float, float]] = []
    for x, f in kept:
        if result and x - result[-1][0] <= spacing:
            continue
        result.append((x, f))
    return result


# ----------------------------------------------------------------------
# Public API
# ----------------------------------------------------------------------


def _grid(step: float) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)


def capacity(
    family: ChannelFamily,
    grid_step: float = DEFAULT_GRID_STEP,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> CapacityResult:
    """max_q C(q) with every maximizer; for a constant family q is the input probability."""
    if not 0.0 < grid_step <= 1e-3:
        raise InvalidParameterError(f"grid_step must lie in (0, 1e-3], got {grid_step}")
    qs = _grid(grid_step)
    found = maximize_scan(
        qs,
        capacity_curve(family, qs),
        lambda q: capacity_at(family, q).C,
        refine_tol,
        slope=lambda q: information_slope(family, q, q),
    )
    moments = [capacity_at(family, q) for q, _ in found]
    result = CapacityResult(
        C=max(f for _, f in found),
        maximizers=tuple(q for q, _ in found),
        variances=tuple(m.V for m in moments),
        T_at=tuple(m.T for m in moments),
    )
    logger.debug(
        f"[capacity] {family.label} C={result.C:.12g} maximizers={list(result.maximizers)}"
    )
    return result


def dispersion_for_eps(result: CapacityResult, eps: float) -> float:
    """V_eps: smallest variance over the maximizers when eps < 1/2, largest otherwise."""
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    return result.V_low if eps < 0.5 else result.V_high


def measurement_independent(family: ChannelFamily) -> ChannelFamily:
    """The family's matrix at full query size, frozen into a constant channel."""
    if family.kind is FamilyKind.CONSTANT:
        return family
    return ChannelFamily.constant(matrix_at(family, 1.0).entries)


def mi_capacity(
    family: ChannelFamily,
    grid_step: float = DEFAULT_GRID_STEP,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> CapacityResult:
    """Capacity of the measurement-independent counterpart, optimised over the input law."""
    return capacity(measurement_independent(family), grid_step, refine_tol)


def mismatched_capacity(family: ChannelFamily, p: float, cells: int) -> float:
    """
    E[iota_{p,p}(X;Y)] when Y is produced at the realized query size
    (X + Binomial(cells - 1, p)) / cells rather than at p.
    """
    if cells < 1:
        raise InvalidParameterError(f"cells must be positive, got {cells}")
    if cells > EXACT_C1_CELL_CAP:
        raise BudgetExceededError(
            f"exact mismatched capacity is limited to {EXACT_C1_CELL_CAP} cells, got {cells}"
        )
    table = density_table(p, matrix_at(family, p))
    others = np.arange(cells)
    weights = binom.pmf(others, cells - 1, p)
    joint = np.zeros_like(table.joint_prob)
    for x, px in enumerate((1.0 - p, p)):
        rows = entries_at(family, (x + others) / cells)[:, x, :]
        joint[x] = px * (weights @ rows)
    used = joint > 0.0
    if np.any(~np.isfinite(table.values[used])):
        return -math.inf
    return float(np.sum(joint[used] * table.values[used]))
