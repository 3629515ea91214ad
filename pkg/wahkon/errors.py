#!/usr/bin/env python3
"""
Exception hierarchy for the Wahkon library.

Every error carries the process exit code the command-line front end
reports for it: 2 for invalid input, 3 for training or numerical failure,
4 for a corrupt artifact.
"""


class WahkonError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class NonPositiveDefinite(WahkonError, ArithmeticError):
    """Cholesky factorization failed even at the largest jitter level."""


class DomainError(WahkonError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DimensionMismatch(WahkonError, ValueError):
    """Array shapes disagree."""

    exit_code = 2


class EmptyInput(WahkonError, ValueError):
    """An operation received no observations."""

    exit_code = 2


class NotFitted(WahkonError):
    """Prediction requested from a model without last-layer state."""


class InsufficientData(WahkonError, ValueError):
    """Too few observations for the requested split or fold count."""


class InsufficientDraws(WahkonError, ValueError):
    """Too few Monte Carlo draws for a reliable estimate."""


class SingularPoint(WahkonError, ArithmeticError):
    """A benchmark function is undefined at the requested input."""


class DataValidationError(WahkonError, ValueError):
    """Malformed tabular input (non-numeric cell, wrong header or width)."""

    exit_code = 2


class ConfigError(WahkonError, ValueError):
    """Unknown configuration key or value violating a type invariant."""

    exit_code = 2


class CorruptArtifact(WahkonError):
    """A model file failed schema or shape validation."""

    exit_code = 4
