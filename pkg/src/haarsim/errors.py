"""Semantic exception hierarchy for the library."""


class HaarsimError(Exception):
    """Base class for all library errors."""


class DomainError(HaarsimError, ValueError):
    """An argument violates a documented precondition (domain, range)."""


class ShapeError(HaarsimError, ValueError):
    """Array dimensions do not match the operation's contract."""


class RankDeficiencyError(HaarsimError, ArithmeticError):
    """Orthonormalization hit a numerically rank-deficient column."""


class ConvergenceError(HaarsimError, ArithmeticError):
    """An iterative routine failed to reach its tolerance."""


class ConfigError(HaarsimError, ValueError):
    """Experiment configuration is invalid (CLI exit code 2)."""
