"""
The iterated function system behind a CHFIS: domain maps, cell coefficients, the surface solvers and
point evaluation.

Cells are 1-based in every public signature, `(n, m)` with `1 <= n <= N` and `1 <= m <= M`.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from functools import partial
from typing import NamedTuple, Self, final, override

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ._services import Executor
from .core import CellCoefficients, GeneralizedDataset, IfsParameters
from .errors import CellOutOfRange, DegenerateGrid, DepthTooLarge, JoinUpViolated, OutOfDomain, ShapeMismatch
from .hook import Hook
from .spec import MAX_DEPTH_ENV, SolverSpec
from .types import ArrayLike, Cell, FloatArray, IntArray
from .utils import as_float_array, readonly

__all__ = [
    "CoefficientGrid",
    "DomainMaps",
    "IfsModel",
    "IterationResult",
    "PointEstimate",
    "PointEstimates",
    "SurfaceGrid",
    "address_axis",
    "build_model",
    "eval_point",
    "eval_points",
    "eval_pq",
    "iterate_surface",
    "solve_surface",
    "verify_joinup",
]

logger = logging.getLogger(__name__)


@final
@dataclass(slots=True, frozen=True, eq=False)
class DomainMaps:
    """
    The affine contractions `phi_n: I -> I_n` and `psi_m: J -> J_m`.

    `phi_n(x) = x_{n-1} + s_n (x - x_0)` with `s_n = (x_n - x_{n-1}) / (x_N - x_0)`, and likewise for `psi_m`.
    """

    x_nodes: FloatArray
    y_nodes: FloatArray

    x_scale: FloatArray
    """`s_n` for `n = 1..N`."""

    y_scale: FloatArray
    """`s_m` for `m = 1..M`."""

    @classmethod
    def from_dataset(cls, dataset: GeneralizedDataset, /) -> Self:
        x, y = dataset.x, dataset.y

        return cls(
            x,
            y,
            readonly(np.diff(x) / (x[-1] - x[0])),
            readonly(np.diff(y) / (y[-1] - y[0])),
        )

    @property
    def x_offset(self) -> FloatArray:
        """The offsets `o_n` such that `phi_n(x) = s_n x + o_n`."""

        return self.x_nodes[:-1] - self.x_scale * self.x_nodes[0]

    @property
    def y_offset(self) -> FloatArray:
        return self.y_nodes[:-1] - self.y_scale * self.y_nodes[0]

    def phi(self, n: int, x: ArrayLike, /) -> FloatArray:
        return self.x_nodes[n - 1] + self.x_scale[n - 1] * (np.asarray(x, dtype=np.float64) - self.x_nodes[0])

    def psi(self, m: int, y: ArrayLike, /) -> FloatArray:
        return self.y_nodes[m - 1] + self.y_scale[m - 1] * (np.asarray(y, dtype=np.float64) - self.y_nodes[0])

    def phi_inverse(self, n: int, x: ArrayLike, /) -> FloatArray:
        return self.x_nodes[0] + (np.asarray(x, dtype=np.float64) - self.x_nodes[n - 1]) / self.x_scale[n - 1]

    def psi_inverse(self, m: int, y: ArrayLike, /) -> FloatArray:
        return self.y_nodes[0] + (np.asarray(y, dtype=np.float64) - self.y_nodes[m - 1]) / self.y_scale[m - 1]


@final
@dataclass(slots=True, frozen=True, eq=False)
class CoefficientGrid:
    """The coefficients of every cell, one `N x M` array per coefficient."""

    e: FloatArray
    f: FloatArray
    g: FloatArray
    k: FloatArray

    e_tilde: FloatArray
    f_tilde: FloatArray
    g_tilde: FloatArray
    k_tilde: FloatArray

    z_eva: float
    """`z_NM - z_N0 - z_0M + z_00`, shared by every cell."""

    t_eva: float
    """`t_NM - t_N0 - t_0M + t_00`, shared by every cell."""

    def cell(self, n: int, m: int, /) -> CellCoefficients:
        i, j = n - 1, m - 1

        return CellCoefficients(
            float(self.e[i, j]),
            float(self.f[i, j]),
            float(self.g[i, j]),
            float(self.k[i, j]),
            float(self.e_tilde[i, j]),
            float(self.f_tilde[i, j]),
            float(self.g_tilde[i, j]),
            float(self.k_tilde[i, j]),
            z_eva=self.z_eva,
            t_eva=self.t_eva,
        )


@final
@dataclass(slots=True, frozen=True, eq=False)
class IfsModel:
    """An immutable, fully built IFS. Create it with `build_model`."""

    dataset: GeneralizedDataset
    params: IfsParameters
    maps: DomainMaps
    coeffs: CoefficientGrid

    @override
    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(N={self.n_cells_x}, M={self.n_cells_y})"

    @property
    def n_cells_x(self) -> int:
        return self.dataset.n_cells_x

    @property
    def n_cells_y(self) -> int:
        return self.dataset.n_cells_y

    @property
    def cells(self) -> list[Cell]:
        """Every cell, row-major, 1-based."""

        return [(n + 1, m + 1) for n, m in np.ndindex(self.n_cells_x, self.n_cells_y)]

    def check_cell(self, cell: Cell, /) -> None:
        """
        Raises
        ------
        `CellOutOfRange`
            If `cell` is not in `1..N x 1..M`.
        """

        n, m = cell

        if not (1 <= n <= self.n_cells_x and 1 <= m <= self.n_cells_y):
            raise CellOutOfRange(
                f"cell ({n}, {m}) is outside 1..{self.n_cells_x} x 1..{self.n_cells_y}"
            )

    def coefficients(self, n: int, m: int, /) -> CellCoefficients:
        """The coefficients of cell `(n, m)`."""

        self.check_cell((n, m))
        return self.coeffs.cell(n, m)

    def apply(
        self, cell: Cell, x: float, y: float, z: float, t: float, /
    ) -> tuple[float, float]:
        """Applies the cell map `F_{n,m}` to `(x, y, z, t)`."""

        c = self.coefficients(*cell)
        alpha, beta, gamma = self.params.cell(*cell)

        return (
            c.e * x + c.f * y + alpha * z + beta * t + c.g * x * y + c.k,
            c.e_tilde * x + c.f_tilde * y + gamma * t + c.g_tilde * x * y + c.k_tilde,
        )


@final
@dataclass(slots=True, frozen=True, eq=False)
class SurfaceGrid:
    """`F1` and `F2` sampled on a rectangular grid, `f1[i, j]` at `(xs[i], ys[j])`."""

    depth: int | None
    """The address-grid depth, or `None` if unknown (e.g. a grid read back from CSV)."""

    xs: FloatArray
    ys: FloatArray
    f1: FloatArray
    f2: FloatArray

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.xs), len(self.ys))

    def value_at(self, i: int, j: int, /) -> tuple[float, float]:
        """`(F1, F2)` at `(xs[i], ys[j])`."""

        return (float(self.f1[i, j]), float(self.f2[i, j]))

    def at_nodes(self, dataset: GeneralizedDataset, /) -> tuple[FloatArray, FloatArray]:
        """The `(F1, F2)` samples at the dataset's nodes, which every address grid contains."""

        ix = np.searchsorted(self.xs, dataset.x)
        iy = np.searchsorted(self.ys, dataset.y)

        return (self.f1[np.ix_(ix, iy)], self.f2[np.ix_(ix, iy)])


class IterationResult(NamedTuple):
    """The outcome of `iterate_surface`."""

    grid: SurfaceGrid
    f2_distances: tuple[float, ...]
    """Sup distances between successive `F2` iterates."""

    f1_distances: tuple[float, ...]
    """Sup distances between successive `F1` iterates, with `F2` frozen."""


@final
@dataclass(slots=True, frozen=True)
class PointEstimate:
    """An approximate surface value with error bounds."""

    f1: float
    f2: float
    error_f1: float
    error_f2: float


class PointEstimates(NamedTuple):
    """`PointEstimate`, vectorized."""

    f1: FloatArray
    f2: FloatArray
    error_f1: FloatArray
    error_f2: FloatArray


def _coefficients(dataset: GeneralizedDataset, params: IfsParameters, /) -> CoefficientGrid:
    x, y, z, t = dataset.x, dataset.y, dataset.z, dataset.t
    alpha, beta, gamma = params.alpha, params.beta, params.gamma

    x0, xn = x[0], x[-1]
    y0, ym = y[0], y[-1]
    dx = x0 - xn
    dy = y0 - ym

    z00, zn0, z0m, znm = z[0, 0], z[-1, 0], z[0, -1], z[-1, -1]
    t00, tn0, t0m, tnm = t[0, 0], t[-1, 0], t[0, -1], t[-1, -1]

    z_eva = znm - zn0 - z0m + z00
    t_eva = tnm - tn0 - t0m + t00

    # corners of every cell: (n-1, m-1), (n, m-1), (n-1, m), (n, m)
    z_ll, z_rl, z_lu, z_ru = z[:-1, :-1], z[1:, :-1], z[:-1, 1:], z[1:, 1:]
    t_ll, t_rl, t_lu, t_ru = t[:-1, :-1], t[1:, :-1], t[:-1, 1:], t[1:, 1:]

    g = (z_ll - z_lu - z_rl + z_ru - alpha * z_eva - beta * t_eva) / (dx * dy)
    e = (z_ll - z_rl - alpha * (z00 - zn0) - beta * (t00 - tn0) - g * dx * y0) / dx
    f = (z_ll - z_lu - alpha * (z00 - z0m) - beta * (t00 - t0m) - g * x0 * dy) / dy
    k = z_ru - e * xn - f * ym - alpha * znm - beta * tnm - g * xn * ym

    g_tilde = (t_ll - t_lu - t_rl + t_ru - gamma * t_eva) / (dx * dy)
    e_tilde = (t_ll - t_rl - gamma * (t00 - tn0) - g_tilde * dx * y0) / dx
    f_tilde = (t_ll - t_lu - gamma * (t00 - t0m) - g_tilde * x0 * dy) / dy
    k_tilde = t_ru - e_tilde * xn - f_tilde * ym - gamma * tnm - g_tilde * xn * ym

    return CoefficientGrid(
        readonly(e),
        readonly(f),
        readonly(g),
        readonly(k),
        readonly(e_tilde),
        readonly(f_tilde),
        readonly(g_tilde),
        readonly(k_tilde),
        float(z_eva),
        float(t_eva),
    )


def _joinup_tolerance(dataset: GeneralizedDataset, /) -> float:
    values = max(1.0, float(np.max(np.abs(dataset.z))), float(np.max(np.abs(dataset.t))))
    x_spread = max(1.0, float(np.max(np.abs(dataset.x))) / dataset.x_length)
    y_spread = max(1.0, float(np.max(np.abs(dataset.y))) / dataset.y_length)

    return 1e-12 * values * x_spread * y_spread


def verify_joinup(model: IfsModel, cell: Cell, /) -> tuple[tuple[float, float], ...]:
    """
    Measures how well a cell map meets its four join-up conditions.

    Parameters
    ----------
    model: `IfsModel`
        The model to check.
    cell: `Cell`
        The 1-based cell `(n, m)`.

    Returns
    -------
    `tuple[tuple[float, float], ...]`
        The signed `(F1, F2)` residuals at the corners `(x_0, y_0)`, `(x_N, y_0)`, `(x_0, y_M)` and `(x_N, y_M)`, in that order.

    Raises
    ------
    `CellOutOfRange`
        If `cell` is not in `1..N x 1..M`.
    """

    model.check_cell(cell)

    ds = model.dataset
    n, m = cell
    last_x, last_y = ds.n_cells_x, ds.n_cells_y

    residuals: list[tuple[float, float]] = []

    for (i, j), (ti, tj) in (
        ((0, 0), (n - 1, m - 1)),
        ((last_x, 0), (n, m - 1)),
        ((0, last_y), (n - 1, m)),
        ((last_x, last_y), (n, m)),
    ):
        f1, f2 = model.apply(
            cell,
            float(ds.x[i]),
            float(ds.y[j]),
            float(ds.z[i, j]),
            float(ds.t[i, j]),
        )
        residuals.append((f1 - float(ds.z[ti, tj]), f2 - float(ds.t[ti, tj])))

    return tuple(residuals)


def build_model(dataset: GeneralizedDataset, params: IfsParameters, /) -> IfsModel:
    """
    Builds the IFS of a dataset: its domain maps and the coefficients of every cell.

    Raises
    ------
    `DegenerateGrid`
        If a grid interval has zero length.
    `ShapeMismatch`
        If `params` is not `N x M`.
    `JoinUpViolated`
        If the coefficients fail to reproduce a join-up condition.
    """

    if np.any(np.diff(dataset.x) <= 0) or np.any(np.diff(dataset.y) <= 0):
        raise DegenerateGrid("the grid has a zero-length interval")

    if params.n_cells != (dataset.n_cells_x, dataset.n_cells_y):
        raise ShapeMismatch(
            f"parameters cover {params.n_cells} cells but the dataset has {(dataset.n_cells_x, dataset.n_cells_y)}"
        )

    model = IfsModel(
        dataset,
        params,
        DomainMaps.from_dataset(dataset),
        _coefficients(dataset, params),
    )

    tolerance = _joinup_tolerance(dataset)

    for cell in model.cells:
        worst = max(abs(r) for pair in verify_joinup(model, cell) for r in pair)

        if not worst <= tolerance:
            raise JoinUpViolated(
                f"cell {cell}: join-up residual {worst:.3g} exceeds {tolerance:.3g}"
            )

    logger.debug(
        "Built a %d x %d-cell model (z_eva=%g, t_eva=%g).",
        model.n_cells_x,
        model.n_cells_y,
        model.coeffs.z_eva,
        model.coeffs.t_eva,
    )

    return model


def eval_pq(model: IfsModel, cell: Cell, x: float, y: float, /) -> tuple[float, float]:
    """
    Evaluates the bilinear parts `p_{n,m}` and `q_{n,m}` at a pre-image point `(x, y)`.

    Raises
    ------
    `CellOutOfRange`
        If `cell` is not in `1..N x 1..M`.
    """

    c = model.coefficients(*cell)
    return (c.p(x, y), c.q(x, y))


def _refine_axis(nodes: FloatArray, scale: FloatArray, axis: FloatArray, /) -> FloatArray:
    blocks = nodes[:-1, None] + scale[:, None] * (axis[None, :] - nodes[0])
    blocks[:, 0] = nodes[:-1]
    blocks[:, -1] = nodes[1:]

    return np.append(blocks[:, :-1].ravel(), nodes[-1])


def address_axis(nodes: ArrayLike, depth: int, /) -> FloatArray:
    """
    The depth-`depth` address points of one axis, i.e. the images of the nodes under every
    composition of `depth` maps. There are `N**(depth + 1) + 1` of them, nodes included.
    """

    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")

    nodes = as_float_array(nodes)
    scale = np.diff(nodes) / (nodes[-1] - nodes[0])

    axis = nodes.copy()

    for _ in range(depth):
        axis = _refine_axis(nodes, scale, axis)

    return readonly(axis)


def _node_positions(n_cells: int, size: int, /) -> IntArray:
    return np.arange(n_cells + 1) * ((size - 1) // n_cells)


def _embedding(n_cells: int, depth: int, /) -> IntArray:
    """Where the depth-`depth - 1` address points sit within the depth-`depth` ones."""

    # the two endpoints play the part of depth -1
    positions = np.array([0, n_cells], dtype=np.intp)
    size = n_cells + 1

    for _ in range(depth):
        positions = np.concatenate(
            [c * (size - 1) + positions[:-1] for c in range(n_cells)]
            + [np.array([n_cells * (size - 1)], dtype=np.intp)]
        )
        size = n_cells * (size - 1) + 1

    return positions


def _hidden_block(
    model: IfsModel, c: int, d: int, xs: FloatArray, ys: FloatArray, f2: FloatArray, /
) -> FloatArray:
    co = model.coeffs
    X = xs[:, None]
    Y = ys[None, :]

    q = co.e_tilde[c, d] * X + co.f_tilde[c, d] * Y + co.g_tilde[c, d] * X * Y + co.k_tilde[c, d]

    return model.params.gamma[c, d] * f2 + q


def _dependent_block(
    model: IfsModel,
    c: int,
    d: int,
    xs: FloatArray,
    ys: FloatArray,
    f1: FloatArray,
    f2: FloatArray,
    /,
) -> FloatArray:
    co = model.coeffs
    X = xs[:, None]
    Y = ys[None, :]

    p = co.e[c, d] * X + co.f[c, d] * Y + co.g[c, d] * X * Y + co.k[c, d]

    return model.params.alpha[c, d] * f1 + model.params.beta[c, d] * f2 + p


def _assemble(
    model: IfsModel, blocks: Sequence[FloatArray], nodes: FloatArray, name: str, /
) -> FloatArray:
    """
    Lays the cell blocks out on the refined grid, in cell order, so a shared edge keeps the value of
    the higher-index cell (taken at that cell's own `x_0` or `y_0` pre-image).

    The blocks must reproduce `nodes` at the node positions up to the join-up tolerance; the nodes are
    then pinned to `nodes` exactly.

    Raises
    ------
    `JoinUpViolated`
        If a block misses the data at a node.
    """

    n, m = model.n_cells_x, model.n_cells_y
    p, q = blocks[0].shape

    out = np.empty((n * (p - 1) + 1, m * (q - 1) + 1), dtype=np.float64)

    for (c, d), block in zip(np.ndindex(n, m), blocks):
        out[c * (p - 1) : c * (p - 1) + p, d * (q - 1) : d * (q - 1) + q] = block

    at_nodes = np.ix_(_node_positions(n, out.shape[0]), _node_positions(m, out.shape[1]))
    residual = float(np.max(np.abs(out[at_nodes] - nodes)))
    tolerance = _joinup_tolerance(model.dataset)

    if not residual <= tolerance:
        raise JoinUpViolated(f"{name} misses the data at a node by {residual:.3g} (tolerance {tolerance:.3g})")

    out[at_nodes] = nodes

    return out


def _apply_hidden(
    model: IfsModel, executor: Executor, xs: FloatArray, ys: FloatArray, f2: FloatArray, /
) -> FloatArray:
    blocks = executor.run(
        partial(_hidden_block, model, c, d, xs, ys, f2)
        for c, d in np.ndindex(model.n_cells_x, model.n_cells_y)
    )
    return _assemble(model, blocks, model.dataset.t, "F2")


def _apply_dependent(
    model: IfsModel,
    executor: Executor,
    xs: FloatArray,
    ys: FloatArray,
    f1: FloatArray,
    f2: FloatArray,
    /,
) -> FloatArray:
    blocks = executor.run(
        partial(_dependent_block, model, c, d, xs, ys, f1, f2)
        for c, d in np.ndindex(model.n_cells_x, model.n_cells_y)
    )
    return _assemble(model, blocks, model.dataset.z, "F1")


def _check_depth(depth: int, spec: SolverSpec, /) -> None:
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")

    if depth > spec.max_depth:
        raise DepthTooLarge(
            f"depth {depth} exceeds the cap of {spec.max_depth} (set {MAX_DEPTH_ENV} to raise it)"
        )


def solve_surface(
    model: IfsModel,
    depth: int,
    /,
    *,
    spec: SolverSpec | None = None,
    on_level: Hook[[int, int, int], None] | None = None,
) -> SurfaceGrid:
    """
    Evaluates the CHFIS exactly on the depth-`depth` address grid.

    Starting from the nodes, every refinement maps each sample `(x, y, F1, F2)` through every cell,
    `F2` first since it never depends on `F1`. The functional equation is applied a finite number of
    times, so the values carry no iteration error.

    Parameters
    ----------
    model: `IfsModel`
        The model to solve.
    depth: `int`
        The refinement depth `L`. Each axis ends up with `N**(L + 1) + 1` samples.
    spec: `SolverSpec | None`
        Depth cap and worker count. Defaults to `SolverSpec.from_environment()`.
    on_level: `Hook[[int, int, int], None] | None`
        Notified with `(level, len(xs), len(ys))` after each refinement.

    Returns
    -------
    `SurfaceGrid`
        The sampled surface.

    Raises
    ------
    `ValueError`
        If `depth` is negative.
    `DepthTooLarge`
        If `depth` exceeds `spec.max_depth`.
    """

    spec = spec or SolverSpec.from_environment()
    _check_depth(depth, spec)

    ds = model.dataset
    maps = model.maps
    executor = Executor(spec.workers)

    xs, ys = ds.x.copy(), ds.y.copy()
    f1, f2 = ds.z.copy(), ds.t.copy()

    for level in range(1, depth + 1):
        next_f2 = _apply_hidden(model, executor, xs, ys, f2)
        next_f1 = _apply_dependent(model, executor, xs, ys, f1, f2)

        xs = _refine_axis(maps.x_nodes, maps.x_scale, xs)
        ys = _refine_axis(maps.y_nodes, maps.y_scale, ys)
        f1, f2 = next_f1, next_f2

        logger.debug("Level %d: %d x %d samples.", level, len(xs), len(ys))

        if on_level is not None:
            on_level.notify(level, len(xs), len(ys))

    return SurfaceGrid(depth, readonly(xs), readonly(ys), readonly(f1), readonly(f2))


def _bilinear(dataset: GeneralizedDataset, /) -> tuple[RegularGridInterpolator, RegularGridInterpolator]:
    axes = (dataset.x, dataset.y)

    return (
        RegularGridInterpolator(axes, dataset.z, method="linear"),
        RegularGridInterpolator(axes, dataset.t, method="linear"),
    )


def _sup_distance(a: FloatArray, b: FloatArray, /) -> float:
    return float(np.max(np.abs(a - b)))


def iterate_surface(
    model: IfsModel,
    depth: int,
    sweeps: int,
    /,
    *,
    spec: SolverSpec | None = None,
) -> IterationResult:
    """
    Solves for the surface on the depth-`depth` address grid by fixed-point iteration of the
    Read-Bajraktarevic operator, seeded with the bilinear interpolant of the nodes.

    The joint operator need not contract, so it runs in two stages: `sweeps` sweeps on `F2` alone
    (contracting by `max|gamma|`), then `sweeps` sweeps on `F1` with `F2` frozen (contracting by
    `max|alpha|`). After `depth + 1` sweeps per stage the result matches `solve_surface`.

    Raises
    ------
    `ValueError`
        If `depth` or `sweeps` is negative.
    `DepthTooLarge`
        If `depth` exceeds `spec.max_depth`.
    """

    spec = spec or SolverSpec.from_environment()
    _check_depth(depth, spec)

    if sweeps < 0:
        raise ValueError(f"sweeps must be nonnegative, got {sweeps}")

    ds = model.dataset
    executor = Executor(spec.workers)

    xs = address_axis(ds.x, depth)
    ys = address_axis(ds.y, depth)

    ex = _embedding(ds.n_cells_x, depth)
    ey = _embedding(ds.n_cells_y, depth)
    pre = np.ix_(ex, ey)
    pre_xs, pre_ys = xs[ex], ys[ey]

    points = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    interp_z, interp_t = _bilinear(ds)
    f1 = interp_z(points)
    f2 = interp_t(points)

    f2_distances: list[float] = []

    for _ in range(sweeps):
        nxt = _apply_hidden(model, executor, pre_xs, pre_ys, f2[pre])
        f2_distances.append(_sup_distance(nxt, f2))
        f2 = nxt

    f1_distances: list[float] = []

    for _ in range(sweeps):
        nxt = _apply_dependent(model, executor, pre_xs, pre_ys, f1[pre], f2[pre])
        f1_distances.append(_sup_distance(nxt, f1))
        f1 = nxt

    logger.debug(
        "Iterated %d sweeps per stage; last distances F2=%g, F1=%g.",
        sweeps,
        f2_distances[-1] if f2_distances else float("nan"),
        f1_distances[-1] if f1_distances else float("nan"),
    )

    return IterationResult(
        SurfaceGrid(depth, xs, ys, readonly(f1), readonly(f2)),
        tuple(f2_distances),
        tuple(f1_distances),
    )


def _node_index(nodes: FloatArray, u: FloatArray, /) -> IntArray:
    """The index of the node each coordinate sits exactly on, or `-1`."""

    i = np.minimum(np.searchsorted(nodes, u, side="left"), len(nodes) - 1)
    return np.where(nodes[i] == u, i, -1)


def _snap(nodes: FloatArray, u: FloatArray, tolerance: float, /) -> FloatArray:
    u = np.clip(u, nodes[0], nodes[-1])

    i = np.clip(np.searchsorted(nodes, u, side="left"), 1, len(nodes) - 1)
    left, right = nodes[i - 1], nodes[i]
    nearest = np.where(u - left <= right - u, left, right)

    return np.where(np.abs(u - nearest) <= tolerance, nearest, u)


def _expand(
    nodes: FloatArray, scale: FloatArray, u: FloatArray, tolerance: float, /
) -> tuple[IntArray, FloatArray]:
    """One address step along an axis: the cell holding each coordinate and its pre-image there."""

    last = len(nodes) - 2

    # ties go to the lower-index cell
    cell = np.clip(np.searchsorted(nodes, u, side="left") - 1, 0, last)
    pre = _snap(nodes, nodes[0] + (u - nodes[cell]) / scale[cell], tolerance)

    # the far edge of a cell belongs to the next cell's near edge
    edge = (pre == nodes[-1]) & (cell < last)

    return (np.where(edge, cell + 1, cell), np.where(edge, nodes[0], pre))


def eval_points(
    model: IfsModel,
    x: ArrayLike,
    y: ArrayLike,
    depth: int | None = None,
    /,
    *,
    spec: SolverSpec | None = None,
) -> PointEstimates:
    """
    Approximates the surface at arbitrary points by expanding their addresses `depth` levels deep,
    starting from the bilinear interpolant of the nodes and applying the functional equation back up.

    Points that land on a node along the way get the node values and a zero error bound, so
    finite-address points of depth `<= depth` come out exact.

    Parameters
    ----------
    model: `IfsModel`
        The model to evaluate.
    x: `ArrayLike`
        Abscissae in `[x_0, x_N]`.
    y: `ArrayLike`
        Ordinates in `[y_0, y_M]`, broadcast against `x`.
    depth: `int | None`
        The expansion depth. Defaults to `spec.eval_depth`.
    spec: `SolverSpec | None`
        Defaults to `SolverSpec.from_environment()`.

    Returns
    -------
    `PointEstimates`
        `F1`, `F2` and their error bounds, shaped like the broadcast inputs.

    Raises
    ------
    `OutOfDomain`
        If a point lies outside the domain or is not finite.
    """

    spec = spec or SolverSpec.from_environment()
    depth = spec.eval_depth if depth is None else depth

    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")

    ds = model.dataset
    maps = model.maps
    co = model.coeffs
    params = model.params

    bx, by = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    shape = bx.shape
    u = bx.ravel()
    v = by.ravel()

    outside = ~(np.isfinite(u) & np.isfinite(v)) | (u < ds.x[0]) | (u > ds.x[-1]) | (v < ds.y[0]) | (v > ds.y[-1])

    if np.any(outside):
        i = int(np.argmax(outside))
        raise OutOfDomain(
            f"point ({u[i]}, {v[i]}) lies outside [{ds.x[0]}, {ds.x[-1]}] x [{ds.y[0]}, {ds.y[-1]}]"
        )

    tol_x = spec.snap_tolerance * ds.x_length
    tol_y = spec.snap_tolerance * ds.y_length

    u = _snap(ds.x, u, tol_x)
    v = _snap(ds.y, v, tol_y)

    steps: list[tuple[IntArray, IntArray, FloatArray, FloatArray]] = []
    on_nodes: list[tuple[IntArray, IntArray]] = []

    for _ in range(depth):
        on_nodes.append((_node_index(ds.x, u), _node_index(ds.y, v)))

        c, u = _expand(ds.x, maps.x_scale, u, tol_x)
        d, v = _expand(ds.y, maps.y_scale, v, tol_y)

        steps.append((c, d, u, v))

    on_nodes.append((_node_index(ds.x, u), _node_index(ds.y, v)))

    interp_z, interp_t = _bilinear(ds)
    base = np.stack((u, v), axis=-1)

    f1 = interp_z(base)
    f2 = interp_t(base)

    def pin(level: int, f1: FloatArray, f2: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        ix, iy = on_nodes[level]
        hit = (ix >= 0) & (iy >= 0)
        return (
            np.where(hit, ds.z[ix, iy], f1),
            np.where(hit, ds.t[ix, iy], f2),
            hit,
        )

    f1, f2, exact = pin(depth, f1, f2)

    for level in reversed(range(depth)):
        c, d, pu, pv = steps[level]

        q = co.e_tilde[c, d] * pu + co.f_tilde[c, d] * pv + co.g_tilde[c, d] * pu * pv + co.k_tilde[c, d]
        p = co.e[c, d] * pu + co.f[c, d] * pv + co.g[c, d] * pu * pv + co.k[c, d]

        f1 = params.alpha[c, d] * f1 + params.beta[c, d] * f2 + p
        f2 = params.gamma[c, d] * f2 + q

        f1, f2, hit = pin(level, f1, f2)
        exact |= hit

    a, b, g = params.max_abs_alpha, params.max_abs_beta, params.max_abs_gamma
    e1 = float(np.ptp(ds.z))
    e2 = float(np.ptp(ds.t))

    for _ in range(depth):
        e1 = a * e1 + b * e2
        e2 = g * e2

    return PointEstimates(
        f1.reshape(shape),
        f2.reshape(shape),
        np.where(exact, 0.0, e1).reshape(shape),
        np.where(exact, 0.0, e2).reshape(shape),
    )


def eval_point(
    model: IfsModel,
    x: float,
    y: float,
    depth: int | None = None,
    /,
    *,
    spec: SolverSpec | None = None,
) -> PointEstimate:
    """
    Approximates `(F1, F2)` at one point. See `eval_points`.

    Raises
    ------
    `OutOfDomain`
        If `(x, y)` lies outside the domain.
    """

    estimates = eval_points(model, x, y, depth, spec=spec)

    return PointEstimate(
        float(estimates.f1),
        float(estimates.f2),
        float(estimates.error_f1),
        float(estimates.error_f2),
    )
