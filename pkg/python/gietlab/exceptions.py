"""Custom exceptions for gietlab.

This module defines a hierarchy of exceptions for the numerical laboratory.
Failures of a mathematical hypothesis or of the renormalisation domain are
raised; failed inequalities are reported in a ``BoundReport`` instead.

Exception hierarchy:
    GietLabError (base)
    ├── CombinatoricsError
    │   └── ReduciblePermutationError
    ├── RepresentationError
    │   ├── DomainError
    │   └── MonotonicityError
    ├── RenormalizationError
    │   ├── ConnectionError
    │   ├── NotInDomainError
    │   └── BudgetError
    ├── EstimateError
    │   └── HypothesisError
    ├── ShadowingError
    │   └── NoShadowError
    ├── CohomologyError
    │   ├── BoundednessError
    │   └── DegenerateDensityError
    └── ConfigError

Example usage:

    from gietlab import renormalize
    from gietlab.exceptions import ConnectionError, NotInDomainError

    try:
        image = renormalize(giet, loop)
    except (ConnectionError, NotInDomainError) as e:
        print(f"Left the neighbourhood at step {e.step_index}")
"""

from __future__ import annotations

from typing import Any


class GietLabError(Exception):
    """Base exception for all gietlab errors.

    All exceptions raised by this library inherit from this class,
    allowing you to catch all gietlab errors with a single
    except clause.
    """

    pass


# =============================================================================
# Combinatorial Errors
# =============================================================================


class CombinatoricsError(GietLabError):
    """Base exception for permutation and Rauzy loop errors."""

    pass


class ReduciblePermutationError(CombinatoricsError):
    """Raised when a permutation is not irreducible.

    Attributes:
        permutation: The offending permutation, as bottom positions.
        k: The smallest k < d with sigma({1..k}) = {1..k}.
    """

    def __init__(
        self,
        message: str,
        permutation: tuple[int, ...] | None = None,
        k: int | None = None,
    ) -> None:
        super().__init__(message)
        self.permutation = permutation
        self.k = k


# =============================================================================
# Representation Errors
# =============================================================================


class RepresentationError(GietLabError):
    """Base exception for invalid numeric representations of maps."""

    pass


class DomainError(RepresentationError):
    """Raised when a point or parameter lies outside its domain.

    Attributes:
        value: The rejected value.
        domain: A human readable description of the domain.
    """

    def __init__(self, message: str, value: Any = None, domain: str | None = None) -> None:
        super().__init__(message)
        self.value = value
        self.domain = domain


class MonotonicityError(RepresentationError):
    """Raised when Hermite data does not define an increasing interpolant.

    Attributes:
        cell: Index of the first offending cell.
        min_derivative: Smallest sampled derivative on that cell.
    """

    def __init__(
        self,
        message: str,
        cell: int | None = None,
        min_derivative: float | None = None,
    ) -> None:
        super().__init__(message)
        self.cell = cell
        self.min_derivative = min_derivative


# =============================================================================
# Renormalisation Errors
# =============================================================================


class RenormalizationError(GietLabError):
    """Base exception for failures of the renormalisation operator.

    Attributes:
        step_index: Index of the elementary step along the loop (if known).
    """

    def __init__(self, message: str, step_index: int | None = None) -> None:
        super().__init__(message)
        self.step_index = step_index


class ConnectionError(RenormalizationError):  # noqa: A001
    """Raised when winner and loser lengths coincide within tolerance.

    A break-point orbit hits a break point and the map leaves the set of
    renormalisable maps.

    Attributes:
        gap: The measured |winner - loser| length difference.
    """

    def __init__(
        self,
        message: str,
        step_index: int | None = None,
        gap: float | None = None,
    ) -> None:
        super().__init__(message, step_index=step_index)
        self.gap = gap


RauzyConnectionError = ConnectionError


class NotInDomainError(RenormalizationError):
    """Raised when the lengths select a different step than the loop prescribes.

    Attributes:
        expected: The step kind prescribed by the loop.
        actual: The step kind selected by the lengths.
    """

    def __init__(
        self,
        message: str,
        step_index: int | None = None,
        expected: str | None = None,
        actual: str | None = None,
    ) -> None:
        super().__init__(message, step_index=step_index)
        self.expected = expected
        self.actual = actual


class BudgetError(RenormalizationError):
    """Raised when an evaluation would exceed its configured budget.

    Attributes:
        required: The amount of work the request needs.
        budget: The configured limit.
    """

    def __init__(self, message: str, required: int | None = None, budget: int | None = None) -> None:
        super().__init__(message)
        self.required = required
        self.budget = budget


# =============================================================================
# Estimate Errors
# =============================================================================


class EstimateError(GietLabError):
    """Base exception for estimate checkers."""

    pass


class HypothesisError(EstimateError):
    """Raised when the hypotheses of an inequality do not hold.

    Attributes:
        iterate: Index of the offending iterate.
        reason: Which hypothesis failed.
    """

    def __init__(self, message: str, iterate: int | None = None, reason: str | None = None) -> None:
        super().__init__(message)
        self.iterate = iterate
        self.reason = reason


# =============================================================================
# Shadowing Errors
# =============================================================================


class ShadowingError(GietLabError):
    """Base exception for the shooting scheme."""

    pass


class NoShadowError(ShadowingError):
    """Raised when no unstable coordinate keeps the orbit in the ball.

    Attributes:
        best_depth: The deepest level reached by any candidate.
        u_best: The candidate reaching ``best_depth``.
    """

    def __init__(self, message: str, best_depth: int = 0, u_best: Any = None) -> None:
        super().__init__(message)
        self.best_depth = best_depth
        self.u_best = u_best


# =============================================================================
# Cohomology Errors
# =============================================================================


class CohomologyError(GietLabError):
    """Base exception for the cohomological equation solver."""

    pass


class BoundednessError(CohomologyError):
    """Raised when Birkhoff sums grow with the orbit length.

    Attributes:
        sup_short: Supremum of |S_n f| over the short horizon.
        sup_long: Supremum of |S_n f| over the long horizon.
        growth: sup_long / sup_short.
    """

    def __init__(
        self,
        message: str,
        sup_short: float | None = None,
        sup_long: float | None = None,
        growth: float | None = None,
    ) -> None:
        super().__init__(message)
        self.sup_short = sup_short
        self.sup_long = sup_long
        self.growth = growth


class DegenerateDensityError(CohomologyError):
    """Raised when an invariant density comes too close to zero.

    Attributes:
        min_density: Smallest sampled density value.
    """

    def __init__(self, message: str, min_density: float | None = None) -> None:
        super().__init__(message)
        self.min_density = min_density


# =============================================================================
# Configuration Errors
# =============================================================================


class ConfigError(GietLabError):
    """Raised when an experiment configuration is invalid.

    Attributes:
        key: The dotted configuration key at fault.
        value: The rejected value.
    """

    def __init__(self, message: str, key: str | None = None, value: Any = None) -> None:
        super().__init__(message)
        self.key = key
        self.value = value
