"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI lives in ``latticelab.cli``:
legitimate negative verdicts are ordinary results, input problems raise
:class:`InputError` subclasses, and :class:`InternalInvariantError` marks
states that should be impossible if the library is correct.
"""

from __future__ import annotations


class LatticeLabError(Exception):
    """Base class for every error raised by this package."""


class InputError(LatticeLabError):
    """Malformed user input: schemas, CSV layout, bad parameters."""


class CarrierMismatchError(InputError):
    """Two elements were combined over different carriers."""


class UndecidableTailError(LatticeLabError):
    """A membership or norm query needed a tail descriptor that is absent.

    Distinct from a negative answer: the query has no truth value on the
    data provided.
    """


class MetricValidationError(InputError):
    """A distance matrix violated the metric axioms.

    Attributes
    ----------
    violations:
        List of ``(axiom, indices, detail)`` tuples, one per violated
        constraint (possibly truncated; see ``truncated``).
    """

    def __init__(self, violations, truncated=False):
        self.violations = list(violations)
        self.truncated = truncated
        lines = ", ".join(v[2] for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"metric axioms violated: {lines}{more}")


class MetadataError(InputError):
    """Declared family metadata contradicts the stored members."""


class PointwiseDivergenceError(LatticeLabError):
    """A coordinate oscillated above tolerance at the horizon."""

    def __init__(self, coordinate, oscillation, tolerance):
        self.coordinate = coordinate
        self.oscillation = oscillation
        self.tolerance = tolerance
        super().__init__(
            f"coordinate {coordinate!r} oscillates by {oscillation:.6g} "
            f"above tolerance {tolerance:.6g} at the horizon"
        )


class DominatingConditionError(LatticeLabError):
    """The jump-extraction precondition (coordinatewise sup large enough) failed."""


class HorizonExhaustedError(LatticeLabError):
    """An extraction ran out of members or coordinates before reaching ``count``.

    Carries what was found so far so callers can report partial progress.
    """

    def __init__(self, message, found=0, usable=()):
        self.found = found
        self.usable = list(usable)
        super().__init__(message)


class LimitInSpaceRefusal(LatticeLabError):
    """Block extraction refused because the limit already lies in the target space.

    This is the mathematically forced outcome, not a bug: no witness can exist.
    """


class InternalInvariantError(LatticeLabError):
    """A dual-route check disagreed or a stored certificate failed to replay."""
