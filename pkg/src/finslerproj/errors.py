"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``BudgetError`` -> 4,
any other ``FinslerError`` -> 3.
"""

from __future__ import annotations


class FinslerError(Exception):
    """Base class for all library errors."""


class ConfigError(FinslerError):
    """Invalid metric descriptor, experiment config or CLI input."""


class CapabilityError(FinslerError):
    """Requested derivative order exceeds what the jet engine was built for."""


class JetDomainError(FinslerError, ArithmeticError):
    """Division, root or log of a jet whose constant term is not admissible."""


class SlitBundleError(FinslerError):
    """A metric quantity was requested at y = 0."""


class DomainError(FinslerError):
    """A point lies outside the chart domain of the metric."""


class MetricValidityError(FinslerError):
    """Fundamental tensor is singular or not positive definite."""


class StiffnessError(FinslerError):
    """Adaptive step size underflowed while the error estimate stayed too large."""


class NoConnectionError(FinslerError):
    """Shooting did not produce a connecting geodesic."""


class CriticalPointError(FinslerError):
    """Schwarzian requested where the first derivative vanishes."""


class NoUniqueTransformError(FinslerError):
    """Degenerate data for a Moebius fit."""


class HypothesisError(FinslerError):
    """A curvature hypothesis (e.g. Ric <= -c^2 g) fails for the given input."""


class GaugeError(FinslerError):
    """A Moebius gauge sends a segment endpoint outside (-1, 1)."""

    def __init__(self, message: str, admissible: tuple[float, float] | None = None):
        super().__init__(message)
        self.admissible = admissible


class ChainError(FinslerError):
    """Chain segments do not join up."""


class AlignmentError(FinslerError):
    """Two parametrisations of a geodesic trace could not be matched."""


class BudgetError(FinslerError):
    """Search budget exhausted without an admissible chain."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class InfiniteDistanceError(FinslerError):
    """A Poincare distance was requested with an endpoint on the boundary of (-1, 1)."""
