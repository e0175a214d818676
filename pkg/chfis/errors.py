"""Exceptions raised by `chfis`. Every error derives from `ChfisError`."""

from __future__ import annotations

__all__ = [
    "AxesDiffer",
    "CellOutOfRange",
    "ChfisError",
    "ContractionViolated",
    "DatasetError",
    "DatasetSyntaxError",
    "DegenerateGrid",
    "DepthTooLarge",
    "DomainMismatch",
    "InsufficientSamples",
    "JoinUpViolated",
    "MagnitudeTooLarge",
    "MissingParameter",
    "MixedParameterEntry",
    "NonFiniteValue",
    "NonMonotoneAxis",
    "NonUniformParameters",
    "OutOfDomain",
    "ParameterConflict",
    "RatioConditionViolated",
    "ShapeMismatch",
    "UnknownSample",
    "ValuesDiffer",
]


class ChfisError(Exception):
    """Base class for all `chfis` errors."""


class DatasetError(ChfisError, ValueError):
    """Base class for errors in generalized interpolation data."""


class NonMonotoneAxis(DatasetError):
    """An axis has duplicate or decreasing nodes."""


class ShapeMismatch(DatasetError):
    """A value matrix (or a pair of datasets) disagrees with the grid dimensions."""


class NonFiniteValue(DatasetError):
    """A coordinate or value is `nan` or infinite."""


class DegenerateGrid(DatasetError):
    """A grid interval has zero length."""


class ContractionViolated(ChfisError, ValueError):
    """
    A cell's free or constrained variables break the contraction constraints.

    Attributes
    ----------
    cell: `tuple[int, int]`
        The offending cell, 1-based.
    constraint: `str`
        The failed constraint, one of `"|alpha|<1"`, `"|gamma|<1"` or `"|beta|+|gamma|<1"`.
    """

    def __init__(self, cell: tuple[int, int], constraint: str, detail: str, /) -> None:
        self.cell = cell
        self.constraint = constraint

        super().__init__(f"cell {cell} violates {constraint} ({detail})")


class MixedParameterEntry(ChfisError, ValueError):
    """Some of alpha, beta and gamma were given as scalars and others as matrices."""


class NonUniformParameters(ChfisError, ValueError):
    """A closed-form bound was asked for per-cell (non-constant) parameters."""


class JoinUpViolated(ChfisError, ArithmeticError):
    """Computed coefficients do not reproduce the join-up conditions."""


class CellOutOfRange(ChfisError, IndexError):
    """A cell index lies outside `1..N x 1..M`."""


class DepthTooLarge(ChfisError, ValueError):
    """A requested refinement depth exceeds the configured cap."""


class OutOfDomain(ChfisError, ValueError):
    """A point lies outside the interpolation domain."""


class InsufficientSamples(ChfisError, ValueError):
    """Too few grid levels or sample pairs for an estimate."""


class RatioConditionViolated(ChfisError, ValueError):
    """Two datasets' axes are not affine images of each other."""


class AxesDiffer(ChfisError, ValueError):
    """Two datasets' axes differ where a bound requires them to be equal."""


class ValuesDiffer(ChfisError, ValueError):
    """Two datasets' z or t values differ where a bound requires them to be equal."""


class DomainMismatch(ChfisError, ValueError):
    """A rescale map does not carry one surface's domain onto the other's."""


class MagnitudeTooLarge(ChfisError, ValueError):
    """A perturbation magnitude would break the monotonicity of an axis."""


class ParameterConflict(ChfisError, ValueError):
    """A command-line flag collides with a per-cell matrix given in a dataset file."""


class DatasetSyntaxError(ChfisError, ValueError):
    """
    A chfis-v1 document is malformed.

    Attributes
    ----------
    line: `int`
        The 1-based line the problem was found on.
    """

    def __init__(self, line: int, message: str, /) -> None:
        self.line = line

        super().__init__(f"line {line}: {message}")


class MissingParameter(ChfisError, ValueError):
    """A parameter is neither in the dataset file nor given on the command line."""


class UnknownSample(ChfisError, LookupError):
    """No bundled sample dataset has the given name."""
