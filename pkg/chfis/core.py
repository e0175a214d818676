"""Core model types: generalized interpolation data, IFS parameters, cell coefficients and points."""

from __future__ import annotations

import math
from dataclasses import KW_ONLY, dataclass
from typing import Self, final, override

import numpy as np

from .errors import (
    ContractionViolated,
    MixedParameterEntry,
    NonFiniteValue,
    NonMonotoneAxis,
    NonUniformParameters,
    ShapeMismatch,
)
from .types import ArrayLike, FloatArray, ParameterLike
from .utils import as_float_array, readonly

__all__ = [
    "CellCoefficients",
    "GeneralizedDataset",
    "IfsParameters",
    "Point2",
    "manhattan_distance",
    "validate_dataset",
    "validate_parameters",
]


@final
@dataclass(slots=True, frozen=True, eq=False)
class GeneralizedDataset:
    """
    Generalized interpolation data on a full rectangular grid.\n
    Build it with `validate_dataset`; the arrays are read-only `float64` copies.
    """

    x: FloatArray
    """The abscissae `x_0 < ... < x_N`."""

    y: FloatArray
    """The ordinates `y_0 < ... < y_M`."""

    z: FloatArray
    """The `(N+1) x (M+1)` dependent values, `z[i, j]` at `(x_i, y_j)`."""

    t: FloatArray
    """The `(N+1) x (M+1)` hidden values, `t[i, j]` at `(x_i, y_j)`."""

    @override
    def __eq__(self, other: object, /) -> bool:
        if not isinstance(other, GeneralizedDataset):
            return NotImplemented

        return (
            self.same_axes(other)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.t, other.t)
        )

    @override
    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.y.tobytes(), self.z.tobytes(), self.t.tobytes()))

    @override
    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(N={self.n_cells_x}, M={self.n_cells_y})"

    @property
    def n_cells_x(self) -> int:
        """`N`, the number of intervals along x."""

        return len(self.x) - 1

    @property
    def n_cells_y(self) -> int:
        """`M`, the number of intervals along y."""

        return len(self.y) - 1

    @property
    def shape(self) -> tuple[int, int]:
        """The shape of the value matrices, `(N+1, M+1)`."""

        return (len(self.x), len(self.y))

    @property
    def x_length(self) -> float:
        return float(self.x[-1] - self.x[0])

    @property
    def y_length(self) -> float:
        return float(self.y[-1] - self.y[0])

    def same_axes(self, other: GeneralizedDataset, /) -> bool:
        """Whether both datasets share the exact same grid."""

        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def same_shape(self, other: GeneralizedDataset, /) -> bool:
        return self.shape == other.shape

    def replace(
        self,
        *,
        x: ArrayLike | None = None,
        y: ArrayLike | None = None,
        z: ArrayLike | None = None,
        t: ArrayLike | None = None,
    ) -> GeneralizedDataset:
        """Returns a validated copy with some of the arrays swapped out."""

        return validate_dataset(
            self.x if x is None else x,
            self.y if y is None else y,
            self.z if z is None else z,
            self.t if t is None else t,
        )


def _validate_axis(name: str, values: ArrayLike, /) -> FloatArray:
    try:
        axis = as_float_array(values)
    except (TypeError, ValueError) as e:
        raise ShapeMismatch(f"axis {name!r} is not a sequence of reals: {e}") from e

    if axis.ndim != 1:
        raise ShapeMismatch(f"axis {name!r} must be one-dimensional, got shape {axis.shape}")

    if len(axis) < 2:
        raise ShapeMismatch(f"axis {name!r} needs at least two nodes, got {len(axis)}")

    if not np.all(np.isfinite(axis)):
        raise NonFiniteValue(f"axis {name!r} holds a non-finite node")

    steps = np.diff(axis)

    if np.any(bad := steps <= 0):
        i = int(np.argmax(bad))
        raise NonMonotoneAxis(
            f"axis {name!r} is not strictly increasing: {name}[{i}]={axis[i]!r} >= {name}[{i + 1}]={axis[i + 1]!r}"
        )

    return readonly(axis)


def _validate_values(name: str, values: ArrayLike, shape: tuple[int, int], /) -> FloatArray:
    try:
        matrix = as_float_array(values)
    except (TypeError, ValueError) as e:
        raise ShapeMismatch(f"section {name!r} is ragged or not numeric: {e}") from e

    if matrix.ndim == 1 and matrix.size == shape[0] * shape[1]:
        matrix = matrix.reshape(shape)

    if matrix.shape != shape:
        raise ShapeMismatch(
            f"section {name!r} has {matrix.size} values in shape {matrix.shape}, expected {shape[0] * shape[1]} in shape {shape}"
        )

    if not np.all(np.isfinite(matrix)):
        i, j = np.argwhere(~np.isfinite(matrix))[0]
        raise NonFiniteValue(f"section {name!r} holds a non-finite value at ({i}, {j})")

    return readonly(matrix)


def validate_dataset(x: ArrayLike, y: ArrayLike, z: ArrayLike, t: ArrayLike, /) -> GeneralizedDataset:
    """
    Validates raw interpolation data and freezes it into a `GeneralizedDataset`.

    Parameters
    ----------
    x: `ArrayLike`
        The `N+1` abscissae.
    y: `ArrayLike`
        The `M+1` ordinates.
    z: `ArrayLike`
        The dependent values, either an `(N+1) x (M+1)` matrix or `(N+1)(M+1)` values in row-major order.
    t: `ArrayLike`
        The hidden values, laid out like `z`.

    Returns
    -------
    `GeneralizedDataset`
        The validated dataset.

    Raises
    ------
    `NonMonotoneAxis`
        If an axis has duplicate or decreasing nodes.
    `ShapeMismatch`
        If an axis has fewer than two nodes, or a value matrix disagrees with the axes.
    `NonFiniteValue`
        If any coordinate or value is `nan` or infinite.
    """

    xs = _validate_axis("x", x)
    ys = _validate_axis("y", y)

    shape = (len(xs), len(ys))

    return GeneralizedDataset(
        xs,
        ys,
        _validate_values("z", z, shape),
        _validate_values("t", t, shape),
    )


@final
@dataclass(slots=True, frozen=True, eq=False)
class IfsParameters:
    """Per-cell free variables `alpha`, `gamma` and constrained variable `beta`, each an `N x M` matrix."""

    alpha: FloatArray
    beta: FloatArray
    gamma: FloatArray

    @override
    def __eq__(self, other: object, /) -> bool:
        if not isinstance(other, IfsParameters):
            return NotImplemented

        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.gamma, other.gamma)
        )

    @override
    def __hash__(self) -> int:
        return hash((self.alpha.tobytes(), self.beta.tobytes(), self.gamma.tobytes()))

    @property
    def n_cells(self) -> tuple[int, int]:
        """`(N, M)`."""

        return self.alpha.shape  # pyright: ignore[reportReturnType]

    @property
    def is_uniform(self) -> bool:
        """Whether every cell shares the same `(alpha, beta, gamma)`."""

        return all(
            bool(np.all(a == a.flat[0])) for a in (self.alpha, self.beta, self.gamma)
        )

    @property
    def max_abs_alpha(self) -> float:
        return float(np.max(np.abs(self.alpha)))

    @property
    def max_abs_beta(self) -> float:
        return float(np.max(np.abs(self.beta)))

    @property
    def max_abs_gamma(self) -> float:
        return float(np.max(np.abs(self.gamma)))

    def uniform(self) -> tuple[float, float, float]:
        """
        Gets the single `(alpha, beta, gamma)` triple shared by every cell.

        Raises
        ------
        `NonUniformParameters`
            If the parameters vary between cells.
        """

        if not self.is_uniform:
            raise NonUniformParameters(
                "closed-form bounds need one (alpha, beta, gamma) triple shared by every cell"
            )

        return (
            float(self.alpha.flat[0]),
            float(self.beta.flat[0]),
            float(self.gamma.flat[0]),
        )

    def cell(self, n: int, m: int, /) -> tuple[float, float, float]:
        """The `(alpha, beta, gamma)` of the 1-based cell `(n, m)`."""

        return (
            float(self.alpha[n - 1, m - 1]),
            float(self.beta[n - 1, m - 1]),
            float(self.gamma[n - 1, m - 1]),
        )

    @classmethod
    def broadcast(
        cls, alpha: float, beta: float, gamma: float, n_cells_x: int, n_cells_y: int, /
    ) -> Self:
        """Creates unvalidated parameters with the same triple in every cell. See `validate_parameters`."""

        shape = (n_cells_x, n_cells_y)

        return cls(
            readonly(np.full(shape, alpha, dtype=np.float64)),
            readonly(np.full(shape, beta, dtype=np.float64)),
            readonly(np.full(shape, gamma, dtype=np.float64)),
        )


def _parameter_matrix(name: str, value: ArrayLike, shape: tuple[int, int], /) -> FloatArray:
    try:
        matrix = as_float_array(value)
    except (TypeError, ValueError) as e:
        raise ShapeMismatch(f"{name} matrix is ragged or not numeric: {e}") from e

    if matrix.ndim == 1 and matrix.size == shape[0] * shape[1]:
        matrix = matrix.reshape(shape)

    if matrix.shape != shape:
        raise ShapeMismatch(f"{name} matrix has shape {matrix.shape}, expected {shape}")

    return matrix


def validate_parameters(
    alpha: ParameterLike,
    beta: ParameterLike,
    gamma: ParameterLike,
    n_cells_x: int,
    n_cells_y: int,
    /,
) -> IfsParameters:
    """
    Validates the IFS parameters of an `N x M`-cell grid.

    Scalars are broadcast to every cell. Either all three are scalars or all three are matrices.

    Parameters
    ----------
    alpha: `ParameterLike`
        The free variables of the dependent component.
    beta: `ParameterLike`
        The constrained variables coupling the hidden component in.
    gamma: `ParameterLike`
        The free variables of the hidden component.
    n_cells_x: `int`
        `N`.
    n_cells_y: `int`
        `M`.

    Returns
    -------
    `IfsParameters`
        The validated parameters.

    Raises
    ------
    `MixedParameterEntry`
        If scalars and matrices are mixed.
    `ShapeMismatch`
        If a matrix is not `N x M`.
    `NonFiniteValue`
        If any entry is `nan` or infinite.
    `ContractionViolated`
        For the first cell (row-major) failing `|alpha| < 1`, `|gamma| < 1` or `|beta| + |gamma| < 1`, checked in that order.
    """

    raw = {"alpha": alpha, "beta": beta, "gamma": gamma}
    scalar = {name: np.ndim(value) == 0 for name, value in raw.items()}

    if len(set(scalar.values())) != 1:
        scalars = sorted(name for name, is_scalar in scalar.items() if is_scalar)
        raise MixedParameterEntry(
            f"alpha, beta and gamma must all be scalars or all matrices; got scalar {', '.join(scalars)}"
        )

    shape = (n_cells_x, n_cells_y)

    if scalar["alpha"]:
        params = IfsParameters.broadcast(
            float(alpha),  # pyright: ignore[reportArgumentType]
            float(beta),  # pyright: ignore[reportArgumentType]
            float(gamma),  # pyright: ignore[reportArgumentType]
            n_cells_x,
            n_cells_y,
        )
    else:
        params = IfsParameters(
            *(readonly(_parameter_matrix(name, value, shape)) for name, value in raw.items())
        )

    for name in raw:
        if not np.all(np.isfinite(getattr(params, name))):
            raise NonFiniteValue(f"{name} holds a non-finite entry")

    for n, m in np.ndindex(shape):
        a, b, g = params.cell(n + 1, m + 1)
        cell = (n + 1, m + 1)

        if not abs(a) < 1:
            raise ContractionViolated(cell, "|alpha|<1", f"alpha={a}")
        if not abs(g) < 1:
            raise ContractionViolated(cell, "|gamma|<1", f"gamma={g}")
        if not abs(b) + abs(g) < 1:
            raise ContractionViolated(cell, "|beta|+|gamma|<1", f"|beta|+|gamma|={abs(b) + abs(g)}")

    return params


@final
@dataclass(slots=True, frozen=True)
class CellCoefficients:
    """
    The coefficients of one cell's map

    `F(x, y, z, t) = (e x + f y + alpha z + beta t + g x y + k, e~ x + f~ y + gamma t + g~ x y + k~)`

    together with the corner second differences `z_eva` and `t_eva` they were derived from.
    """

    e: float
    f: float
    g: float
    k: float

    e_tilde: float
    f_tilde: float
    g_tilde: float
    k_tilde: float

    _: KW_ONLY

    z_eva: float
    t_eva: float

    def p(self, x: float, y: float, /) -> float:
        """The bilinear part of the dependent component."""

        return self.e * x + self.f * y + self.g * x * y + self.k

    def q(self, x: float, y: float, /) -> float:
        """The bilinear part of the hidden component."""

        return self.e_tilde * x + self.f_tilde * y + self.g_tilde * x * y + self.k_tilde

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.e,
            self.f,
            self.g,
            self.k,
            self.e_tilde,
            self.f_tilde,
            self.g_tilde,
            self.k_tilde,
        )


@final
@dataclass(slots=True, frozen=True)
class Point2:
    """A point of the plane."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NonFiniteValue(f"point ({self.x}, {self.y}) is not finite")


def manhattan_distance(a: Point2, b: Point2, /) -> float:
    """`|a.x - b.x| + |a.y - b.y|`."""

    return abs(a.x - b.x) + abs(a.y - b.y)
