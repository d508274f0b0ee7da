"""Exception taxonomy shared across the package.

Every error carries a ``category`` used by the CLI to pick the exit code and
the machine-parsable stderr prefix: ``validation`` (exit 1), ``io`` (exit 2),
``numerical`` (exit 3).
"""

from __future__ import annotations


class PothError(Exception):
    category = "validation"


class ValidationError(PothError):
    """Malformed or inconsistent input data."""

    category = "validation"


class ParseError(ValidationError):
    """Syntactically or structurally invalid input document."""


class UnsupportedSourceError(ValidationError):
    """Operation requires joint ranking information the source cannot provide."""


class InconsistentScoresError(ValidationError):
    """Score vector implies a variance larger than the attainable maximum."""


class NumericalError(PothError):
    category = "numerical"


class DegenerateCovarianceError(NumericalError):
    """A derived contrast has non-positive variance."""


class NotPositiveSemidefiniteError(NumericalError):
    """Covariance factorization failed even after jitter escalation."""
