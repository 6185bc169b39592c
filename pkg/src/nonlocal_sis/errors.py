"""Exception types shared across the package.

Solver failures carry diagnostics (residual, iteration count) so callers
can embed them in reports instead of losing them in tracebacks.
"""

from __future__ import annotations


class NonlocalSISError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(NonlocalSISError, ValueError):
    """Malformed input: bad sizes, empty grids, inconsistent shapes."""


class InvalidCoefficientError(NonlocalSISError, ValueError):
    """Coefficient field violates strict positivity."""


class InvalidStateError(NonlocalSISError, ValueError):
    """Population state contains negative components."""


class InvalidConfigError(NonlocalSISError, ValueError):
    """Integrator or experiment configuration violates its constraints."""


class InvalidWindowError(NonlocalSISError, ValueError):
    """Rate-fitting window contains nonpositive values or lies outside the data."""


class InvalidBracketError(NonlocalSISError, ValueError):
    """Root bracket has no sign change."""


class PreconditionError(NonlocalSISError):
    """A documented precondition of an operation does not hold."""


class SolverFailure(NonlocalSISError):
    """Iterative solver did not reach its target accuracy.

    Attributes
    ----------
    residual : float or None
        Best residual reached before giving up.
    iterations : int or None
        Iterations spent.
    """

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SolverInconsistency(NonlocalSISError):
    """Two independent solution routes disagree beyond tolerance."""


class NoEndemicState(NonlocalSISError):
    """Endemic equilibrium requested but the growth rate is not positive."""


class NoPositiveState(NonlocalSISError):
    """Logistic stationary problem has no positive solution."""


class UniquenessViolation(NonlocalSISError):
    """Monotone iteration limits from below and above disagree."""


class BracketBreach(NonlocalSISError):
    """An iterate left the invariant region where the nonlinearity is defined."""


class IntegrationFailure(NonlocalSISError):
    """Time integration produced NaN/overflow or a meaningfully negative state."""


class ConfigError(NonlocalSISError, ValueError):
    """Experiment configuration is malformed or semantically invalid.

    ``line`` is set for parse errors, ``key`` for semantic errors.
    """

    def __init__(self, message: str, line: int | None = None,
                 key: str | None = None):
        super().__init__(message)
        self.line = line
        self.key = key
