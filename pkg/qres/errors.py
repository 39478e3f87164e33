"""Exception hierarchy for qres."""


class QresError(Exception):
    """Base class for every error raised by qres."""


class InvalidParameterError(QresError, ValueError):
    """A parameter lies outside the domain an operation accepts."""


class ContinuityError(QresError):
    """A transition probability crosses zero inside a continuity window."""


class SupportExplosionError(QresError):
    """An exact convolution outgrew the configured support cap."""


class BudgetExceededError(QresError):
    """A cell, tuple or memory budget would be breached."""


class NonUniqueOptimizerError(QresError):
    """An optimizer that must be unique is tied."""


class UndefinedDensityError(QresError):
    """An information density used with positive probability is -inf."""
