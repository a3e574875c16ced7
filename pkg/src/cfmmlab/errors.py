"""Exception types shared across the package."""

from __future__ import annotations


class CfmmLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(CfmmLabError, ValueError):
    """Vectors of incompatible length were combined."""


class DomainError(CfmmLabError, ValueError):
    """A point lies outside the domain of a function (e.g. y=0 for -x^2/y)."""


class NonsmoothPointError(DomainError):
    """Gradient requested at a point where the function is not differentiable."""


class UnsupportedVariantError(CfmmLabError, ValueError):
    """The requested operation is not defined for this curve/utility variant."""


class ConfigError(CfmmLabError, ValueError):
    """Invalid experiment configuration (unknown key, bad value, missing file)."""


class SolverError(CfmmLabError, RuntimeError):
    """Base class for numerical failures."""


class ConvergenceError(SolverError):
    """An iterative solver exhausted its iteration budget.

    Carries the last residual so callers can report how close the run got.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BoundaryDriftError(ConvergenceError):
    """Fixed-point iterates drifted to the price-simplex boundary.

    Raised instead of returning a spurious fixed point when the expected
    one-step price map pushes prices toward a coordinate hyperplane,
    the regime in which no interior fixed point exists.
    """


class DegenerateEconomyError(SolverError):
    """No equilibrium: some good has zero aggregate endowment."""


class ReducibleChainError(CfmmLabError, ValueError):
    """The transition matrix is not irreducible.

    ``closed_classes`` lists the closed communicating classes found.
    """

    def __init__(self, message: str, closed_classes: list[list[int]]):
        super().__init__(message)
        self.closed_classes = closed_classes
