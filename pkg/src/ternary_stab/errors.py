"""Exception types shared across the package.

Plain ``ValueError`` is used for rejected inputs and precondition
violations; the classes below mark numeric or resource failures that a
caller may want to handle separately (CLI exit code 3).
"""
from __future__ import annotations


class TernaryStabError(Exception):
    """Base class for numeric/resource failures."""


class RangeExhaustedError(TernaryStabError):
    """Scaling iteration would overflow floating point before converging.

    ``max_usable_n`` is the largest exponent that stays inside the guard.
    """

    def __init__(self, max_usable_n: int, message: str | None = None):
        self.max_usable_n = max_usable_n
        super().__init__(
            message
            or f"iteration magnitude guard hit; max usable exponent is n={max_usable_n}"
        )


class NonSummableError(TernaryStabError):
    """Scaled control series could not be certified convergent."""

    def __init__(self, estimated_ratio: float, message: str | None = None):
        self.estimated_ratio = estimated_ratio
        super().__init__(
            message
            or f"series tail not certifiably geometric (estimated ratio {estimated_ratio:.6g})"
        )


class ExtractionError(TernaryStabError):
    """A basis trace failed to converge during map extraction."""

    def __init__(self, basis_index, trace, message: str | None = None):
        self.basis_index = basis_index
        self.trace = trace
        super().__init__(
            message
            or f"iteration did not converge on basis element {basis_index}"
        )


class ControlContractError(TernaryStabError):
    """A control function returned a negative or non-finite value."""
