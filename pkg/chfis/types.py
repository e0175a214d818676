"""Shared type aliases."""

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "ArrayLike",
    "Cell",
    "FloatArray",
    "GRID_FORMATS",
    "GridFormat",
    "IntArray",
    "PERTURBATION_KINDS",
    "ParameterLike",
    "PerturbationKind",
]


type FloatArray = NDArray[np.float64]
type IntArray = NDArray[np.intp]

type Cell = tuple[int, int]
"""A 1-based cell index `(n, m)`, with `1 <= n <= N` and `1 <= m <= M`."""

type ParameterLike = float | ArrayLike
"""A scalar broadcast to every cell, or an `N x M` matrix."""

type PerturbationKind = Literal["x", "y", "z", "t", "all"]

PERTURBATION_KINDS: tuple[PerturbationKind, ...] = ("x", "y", "z", "t", "all")

type GridFormat = Literal["csv", "pgm"]

GRID_FORMATS: tuple[GridFormat, ...] = ("csv", "pgm")
