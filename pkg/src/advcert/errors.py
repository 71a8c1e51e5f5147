"""Exception hierarchy shared across the package.

Two families matter to callers: configuration/input problems (``ConfigError``
and its relatives, CLI exit code 2) and numeric failures detected during a
computation (``NumericError`` and subclasses, CLI exit code 3).
"""

from __future__ import annotations

__all__ = [
    "AdvcertError",
    "ConfigError",
    "DomainError",
    "ValidationError",
    "NumericError",
    "InfeasibleTransportError",
    "IndefiniteKernelError",
    "DivergenceError",
]


class AdvcertError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(AdvcertError, ValueError):
    """Invalid configuration, file, or CLI argument."""


class DomainError(AdvcertError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(AdvcertError, ValueError):
    """A constructed object violates one of its declared invariants."""


class NumericError(AdvcertError, RuntimeError):
    """A computation failed numerically (infeasible, indefinite, divergent)."""


class InfeasibleTransportError(NumericError):
    """No feasible coupling exists under the given finite-cost pattern."""


class IndefiniteKernelError(NumericError):
    """A Gram matrix violated the positive-semidefiniteness tolerance."""


class DivergenceError(NumericError):
    """An iterative optimisation diverged."""
