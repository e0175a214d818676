"""Small utilities."""

from __future__ import annotations

import numpy as np

from .types import FloatArray

__all__ = [
    "as_float_array",
    "clamp",
    "readonly",
]


def clamp(value: float, minimum: float, maximum: float, /) -> float:
    """
    Clamps a value between `minimum` and `maximum`.

    Parameters
    ----------
    value: `float`
        The value to clamp.
    minimum: `float`
        The lowest value returned.
    maximum: `float`
        The highest value returned.

    Returns
    -------
    `float`
        The clamped value.
    """

    return min(max(value, minimum), maximum)


def readonly(array: FloatArray, /) -> FloatArray:
    """Marks an array as read-only, in place, and returns it."""

    array.flags.writeable = False
    return array


def as_float_array(values: object, /) -> FloatArray:
    """Converts to a fresh, contiguous `float64` array."""

    return np.array(values, dtype=np.float64, copy=True)
