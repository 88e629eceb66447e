"""Typed errors shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2,
NumericalError -> 3, BudgetError -> 4.
"""


class MFLilError(Exception):
    """Base class for all package errors."""


class ValidationError(MFLilError):
    """Invalid input: bad parameters, malformed model files, unit mismatches."""


class NumericalError(MFLilError):
    """A numerical contract failed (cross-check disagreement, no convergence)."""


class BudgetError(MFLilError):
    """An enumeration or work budget would be exceeded."""


class FlatSpectrumError(ValidationError):
    """chi is identically zero (d = delta); inversion machinery has no domain."""
