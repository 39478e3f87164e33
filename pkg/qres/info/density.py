"""Information densities and their moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from qres.channels.models import ChannelFamily, ChannelMatrix, FamilyKind, entries_at
from qres.errors import InvalidParameterError, UndefinedDensityError


@dataclass(frozen=True, eq=False)
class InfoDensityTable:
    """
    iota_{p,q}(x;y) = log P^q(y|x) - log P_Y^{p,q}(y) in nats, together with
    the joint law P(x) P^q(y|x) it is averaged under.
    """

    input_prob: float
    channel: ChannelMatrix
    values: np.ndarray      # shape (2, |Y|), -inf where P^q(y|x) = 0
    joint_prob: np.ndarray  # shape (2, |Y|)

    @property
    def used(self) -> np.ndarray:
        """Cells with positive joint probability."""
        return self.joint_prob > 0.0

    @property
    def output_marginal(self) -> np.ndarray:
        return self.joint_prob.sum(axis=0)

    @property
    def max_used_value(self) -> float:
        """Largest density over used cells (the per-step cap a0)."""
        return float(np.max(self.values[self.used]))

    def used_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Values and probabilities of the used cells, flattened."""
        mask = self.used
        return self.values[mask], self.joint_prob[mask]


@dataclass(frozen=True)
class InfoStats:
    """Mean, variance and third absolute central moment of a density (nats)."""

    C: float
    V: float
    T: float


def _input_law(p: float | np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.stack([1.0 - p, p], axis=-1)


def _densities(entries: np.ndarray, marginal: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.log(entries) - np.log(marginal)[..., None, :]
    return np.where((entries > 0.0) & (marginal[..., None, :] > 0.0), values, -np.inf)


def density_table(p: float, channel: ChannelMatrix) -> InfoDensityTable:
    """Information density table for a Bernoulli(p) input through ``channel``."""
    p = float(p)
    if np.isnan(p) or not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"input probability must lie in [0, 1], got {p}")
    entries = np.asarray(channel.entries, dtype=float)
    joint = _input_law(p)[:, None] * entries
    values = _densities(entries, joint.sum(axis=0))
    values.setflags(write=False)
    joint.setflags(write=False)
    return InfoDensityTable(input_prob=p, channel=channel, values=values, joint_prob=joint)


def stats(table: InfoDensityTable) -> InfoStats:
    """Exact moments of the density under its joint law."""
    values, probs = table.used_atoms()
    if not np.all(np.isfinite(values)):
        raise UndefinedDensityError("a used cell of the density table is -inf")
    mean = float(np.dot(probs, values))
    centred = values - mean
    var = float(np.dot(probs, centred**2))
    third = float(np.dot(probs, np.abs(centred) ** 3))
    return InfoStats(C=mean, V=max(var, 0.0), T=third)


def moments_grid(
    family: ChannelFamily,
    input_probs: np.ndarray,
    query_sizes: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised (C, V, T) over paired grids of input probability and query size.

    ``query_sizes`` defaults to ``input_probs`` (the p = q diagonal).
    """
    ps = np.asarray(input_probs, dtype=float)
    qs = ps if query_sizes is None else np.asarray(query_sizes, dtype=float)
    entries = entries_at(family, qs)
    joint = _input_law(ps)[..., :, None] * entries
    values = _densities(entries, joint.sum(axis=-2))
    used = joint > 0.0
    safe = np.where(used, values, 0.0)
    axes = (-2, -1)
    mean = np.sum(joint * safe, axis=axes)
    centred = np.where(used, safe - mean[..., None, None], 0.0)
    var = np.sum(joint * centred**2, axis=axes)
    third = np.sum(joint * np.abs(centred) ** 3, axis=axes)
    return mean, np.maximum(var, 0.0), third


def binary_entropy(x: np.ndarray | float) -> np.ndarray | float:
    """h_b(x) in nats."""
    value = entr(x) + entr(1.0 - np.asarray(x, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def closed_form_capacity(family: ChannelFamily, q: float) -> float | None:
    """C(., q) = E[iota_{q,q}] from the closed forms of each family, if one exists."""
    a = family.parameter
    if family.kind is FamilyKind.BSC:
        beta = q * (1.0 - a * q) + (1.0 - q) * a * q
        return binary_entropy(beta) - binary_entropy(a * q)
    if family.kind is FamilyKind.BEC:
        return (1.0 - q * a) * binary_entropy(q)
    if family.kind is FamilyKind.Z:
        return binary_entropy(q * (1.0 - a * q)) - q * binary_entropy(a * q)
    return None
