"""
Stability of a CHFIS under perturbations of its data: rescale maps between grids, the closed-form
bounds, the dataset metric, and their empirical verification.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Any, NamedTuple, Self, final

import numpy as np

from ._services import Executor
from .core import GeneralizedDataset, IfsParameters
from .engine import IfsModel, address_axis, build_model, eval_points, solve_surface
from .errors import (
    AxesDiffer,
    DomainMismatch,
    MagnitudeTooLarge,
    RatioConditionViolated,
    ShapeMismatch,
    ValuesDiffer,
)
from .hook import Hook
from .spec import CampaignSpec, SolverSpec, StabilityConfig
from .types import PERTURBATION_KINDS, ArrayLike, FloatArray, PerturbationKind
from .utils import readonly

__all__ = [
    "PerturbationSizes",
    "RatioCheck",
    "RescaleMap",
    "StabilityBounds",
    "StabilityReport",
    "SupDiff",
    "VIOLATION_TOLERANCE",
    "Violation",
    "bound_dependent",
    "bound_hidden",
    "bound_hidden_surface",
    "bound_independent",
    "build_rescale",
    "check_ratio_invariance",
    "direct_sup_diff",
    "empirical_sup_diff",
    "generate_perturbation",
    "perturbation_metric",
    "perturbation_sizes",
    "run_campaign",
    "stability_bounds",
    "verify_stability",
]

logger = logging.getLogger(__name__)

VIOLATION_TOLERANCE = 1e-9
_GRID_MATCH = 1e-12


class RatioCheck(NamedTuple):
    """The outcome of `check_ratio_invariance`."""

    holds: bool
    x_residuals: FloatArray
    """`|ratio_n - global ratio|` for `n = 1..N`."""

    y_residuals: FloatArray


class PerturbationSizes(NamedTuple):
    """How far a perturbed dataset lies from its base."""

    max_xy_manhattan: float
    """`max_n |x_n - x*_n| + max_m |y_m - y*_m|`."""

    max_dz: float
    max_dt: float


class StabilityBounds(NamedTuple):
    """Every closed-form bound for one perturbation. See `StabilityReport` for the fields."""

    bound_xy: float
    bound_z: float
    bound_t: float
    bound_t_hidden_surface: float
    metric_d: float


class SupDiff(NamedTuple):
    """The largest deviations of the two components, `F1` first."""

    f1: float
    f2: float


@final
@dataclass(slots=True, frozen=True, eq=False)
class RescaleMap:
    """
    The piecewise-affine map `R` carrying each cell of one grid onto the matching cell of another,
    axis by axis, and its inverse `K`. Nodes map to nodes exactly.
    """

    x: FloatArray
    y: FloatArray
    x_star: FloatArray
    y_star: FloatArray

    @classmethod
    def identity(cls, dataset: GeneralizedDataset, /) -> Self:
        return cls(dataset.x, dataset.y, dataset.x, dataset.y)

    @property
    def is_identity(self) -> bool:
        return np.array_equal(self.x, self.x_star) and np.array_equal(self.y, self.y_star)

    def apply_x(self, x: ArrayLike, /) -> FloatArray:
        return np.interp(x, self.x, self.x_star)

    def apply_y(self, y: ArrayLike, /) -> FloatArray:
        return np.interp(y, self.y, self.y_star)

    def apply(self, x: ArrayLike, y: ArrayLike, /) -> tuple[FloatArray, FloatArray]:
        """`R(x, y)`."""

        return (self.apply_x(x), self.apply_y(y))

    def inverse(self, x: ArrayLike, y: ArrayLike, /) -> tuple[FloatArray, FloatArray]:
        """`K(x, y)`, i.e. `R` backwards."""

        return (np.interp(x, self.x_star, self.x), np.interp(y, self.y_star, self.y))

    def cell_maps(self, n: int, m: int, /) -> tuple[tuple[float, float], tuple[float, float]]:
        """
        The per-axis `(scale, offset)` pairs of `R_{n,m}`, i.e. `R_{n,m}(x, y) = (a x + b, c y + d)`
        returns `((a, b), (c, d))`.
        """

        a = (self.x_star[n] - self.x_star[n - 1]) / (self.x[n] - self.x[n - 1])
        c = (self.y_star[m] - self.y_star[m - 1]) / (self.y[m] - self.y[m - 1])

        return (
            (float(a), float(self.x_star[n - 1] - a * self.x[n - 1])),
            (float(c), float(self.y_star[m - 1] - c * self.y[m - 1])),
        )


@final
@dataclass(slots=True, frozen=True)
class Violation:
    """A measured deviation exceeding one of the bounds."""

    bound: str
    """The `StabilityReport` field that was exceeded."""

    measured: float
    limit: float

    hard: bool
    """Whether the bound carries no free constant, so exceeding it is a genuine failure."""


@final
@dataclass(slots=True, frozen=True)
class StabilityReport:
    """
    Closed-form bounds for one perturbation next to the deviations actually measured.\n
    `metric_d` is the sum `bound_t + bound_z + bound_xy`.
    """

    bound_xy: float
    """Independent-variable term, in `x` and `y`. Carries the calibrated `m_bar` and `delta`."""

    bound_z: float
    """Dependent-variable term, bounds `||F1 - G1||` when only `z` changes."""

    bound_t: float
    """Hidden-variable term, bounds `||F1 - G1||` when only `t` changes."""

    bound_t_hidden_surface: float
    """Bounds `||F2 - G2||` when only `t` changes."""

    metric_d: float

    empirical_sup_f1: float
    """`sup|F1 - G1|` over the perturbed grid, where it overlaps the base domain."""

    empirical_sup_f2: float

    rescaled_sup_f1: float
    """`sup|F1 - G1 o R|` over the base grid. Vanishes when only the grid moved."""

    rescaled_sup_f2: float

    max_xy_manhattan: float
    max_dz: float
    max_dt: float

    violations: tuple[Violation, ...] = field(default=())

    @property
    def violated(self) -> bool:
        return bool(self.violations)

    @property
    def hard_violations(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.hard)

    def to_dict(self) -> dict[str, Any]:
        """A JSON-ready view of the report."""

        return asdict(self) | {"violated": self.violated}


def _check_same_shape(base: GeneralizedDataset, pert: GeneralizedDataset, /) -> None:
    if not base.same_shape(pert):
        raise ShapeMismatch(f"datasets have grids {base.shape} and {pert.shape}")


def _ratio_residuals(axis: FloatArray, star: FloatArray, /) -> FloatArray:
    ratio = (axis[0] - axis[-1]) / (star[0] - star[-1])
    return np.abs((axis[:-1] - axis[1:]) / (star[:-1] - star[1:]) - ratio)


def check_ratio_invariance(
    base: GeneralizedDataset, pert: GeneralizedDataset, /, tol: float = 1e-9
) -> RatioCheck:
    """
    Checks that every interval of the perturbed grid is its base interval scaled by one global
    ratio per axis, i.e. that `x*` is an affine image of `x` and `y*` one of `y`.

    Raises
    ------
    `ShapeMismatch`
        If the grids differ in size.
    """

    _check_same_shape(base, pert)

    x_residuals = readonly(_ratio_residuals(base.x, pert.x))
    y_residuals = readonly(_ratio_residuals(base.y, pert.y))

    return RatioCheck(
        bool(np.all(x_residuals <= tol) and np.all(y_residuals <= tol)),
        x_residuals,
        y_residuals,
    )


def _require_ratio(base: GeneralizedDataset, pert: GeneralizedDataset, /) -> None:
    check = check_ratio_invariance(base, pert)

    if not check.holds:
        worst = max(float(np.max(check.x_residuals)), float(np.max(check.y_residuals)))
        raise RatioConditionViolated(
            f"perturbed axes are not affine images of the base axes (worst ratio residual {worst:.3g})"
        )


def build_rescale(base: GeneralizedDataset, pert: GeneralizedDataset, /) -> RescaleMap:
    """
    Builds the rescale map from `base`'s domain onto `pert`'s.

    A perturbed domain reaching outside the base domain is allowed but logged, since the
    independent-variable bound assumes it stays inside.

    Raises
    ------
    `RatioConditionViolated`
        If the axes fail the invariance-of-ratio condition.
    """

    _require_ratio(base, pert)

    if (
        pert.x[0] < base.x[0]
        or pert.x[-1] > base.x[-1]
        or pert.y[0] < base.y[0]
        or pert.y[-1] > base.y[-1]
    ):
        logger.warning(
            "Perturbed domain [%g, %g] x [%g, %g] is not inside the base domain [%g, %g] x [%g, %g].",
            pert.x[0],
            pert.x[-1],
            pert.y[0],
            pert.y[-1],
            base.x[0],
            base.x[-1],
            base.y[0],
            base.y[-1],
        )

    return RescaleMap(base.x, base.y, pert.x, pert.y)


def perturbation_sizes(base: GeneralizedDataset, pert: GeneralizedDataset, /) -> PerturbationSizes:
    _check_same_shape(base, pert)

    return PerturbationSizes(
        float(np.max(np.abs(base.x - pert.x)) + np.max(np.abs(base.y - pert.y))),
        float(np.max(np.abs(base.z - pert.z))),
        float(np.max(np.abs(base.t - pert.t))),
    )


def _abs_uniform(params: IfsParameters, /) -> tuple[float, float, float]:
    alpha, beta, gamma = params.uniform()
    return (abs(alpha), abs(beta), abs(gamma))


def _independent_term(
    manhattan: float, params: IfsParameters, cfg: StabilityConfig, /
) -> float:
    alpha, beta, gamma = _abs_uniform(params)
    factor = 2 * beta * gamma / ((1 - alpha) * (1 - gamma)) + (1 + alpha) / (1 - alpha)

    return cfg.m_bar * factor * manhattan**cfg.delta


def _dependent_term(max_dz: float, params: IfsParameters, /) -> float:
    alpha, _, _ = _abs_uniform(params)
    return 4 * (1 + alpha) / (1 - alpha) * max_dz


def _hidden_term(max_dt: float, params: IfsParameters, /) -> float:
    alpha, beta, gamma = _abs_uniform(params)
    return 8 * beta / ((1 - alpha) * (1 - gamma)) * max_dt


def _hidden_surface_term(max_dt: float, params: IfsParameters, /) -> float:
    _, _, gamma = _abs_uniform(params)
    return 4 * (1 + gamma) / (1 - gamma) * max_dt


def _require_same_axes(base: GeneralizedDataset, pert: GeneralizedDataset, /) -> None:
    if not base.same_axes(pert):
        raise AxesDiffer("the bound needs both datasets on the same grid")


def _require_same(name: str, a: FloatArray, b: FloatArray, /) -> None:
    if not np.array_equal(a, b):
        raise ValuesDiffer(f"the bound needs identical {name} values")


def bound_independent(
    base: GeneralizedDataset,
    pert: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    /,
) -> float:
    """
    Bounds `||F1 - G1||` on the perturbed domain for a perturbation of the grid alone:

    `m_bar * (2 beta gamma / ((1 - alpha)(1 - gamma)) + (1 + alpha) / (1 - alpha)) * max_Manhattan**delta`

    Raises
    ------
    `ShapeMismatch`
        If the grids differ in size.
    `ValuesDiffer`
        If `z` or `t` differ.
    `RatioConditionViolated`
        If the axes fail the invariance-of-ratio condition.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    _check_same_shape(base, pert)
    _require_same("z", base.z, pert.z)
    _require_same("t", base.t, pert.t)
    _require_ratio(base, pert)

    return _independent_term(perturbation_sizes(base, pert).max_xy_manhattan, params, cfg)


def bound_dependent(
    base: GeneralizedDataset, pert: GeneralizedDataset, params: IfsParameters, /
) -> float:
    """
    Bounds `||F1 - G1||` for a perturbation of `z` alone: `4 (1 + alpha) / (1 - alpha) * max|dz|`.

    Raises
    ------
    `AxesDiffer`
        If the grids differ.
    `ValuesDiffer`
        If `t` differs.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    _check_same_shape(base, pert)
    _require_same_axes(base, pert)
    _require_same("t", base.t, pert.t)

    return _dependent_term(perturbation_sizes(base, pert).max_dz, params)


def bound_hidden_surface(
    base: GeneralizedDataset, pert: GeneralizedDataset, params: IfsParameters, /
) -> float:
    """Bounds `||F2 - G2||` for a perturbation of `t` alone: `4 (1 + gamma) / (1 - gamma) * max|dt|`."""

    _check_same_shape(base, pert)
    _require_same_axes(base, pert)
    _require_same("z", base.z, pert.z)

    return _hidden_surface_term(perturbation_sizes(base, pert).max_dt, params)


def bound_hidden(
    base: GeneralizedDataset, pert: GeneralizedDataset, params: IfsParameters, /
) -> float:
    """
    Bounds `||F1 - G1||` for a perturbation of `t` alone: `8 beta / ((1 - alpha)(1 - gamma)) * max|dt|`.

    Raises
    ------
    `AxesDiffer`
        If the grids differ.
    `ValuesDiffer`
        If `z` differs.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    _check_same_shape(base, pert)
    _require_same_axes(base, pert)
    _require_same("z", base.z, pert.z)

    return _hidden_term(perturbation_sizes(base, pert).max_dt, params)


def perturbation_metric(
    base: GeneralizedDataset,
    pert: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    /,
) -> float:
    """
    The distance between two datasets: the hidden, dependent and independent-variable terms added
    up. It bounds `||F1 - G1||` for any combined perturbation.

    Raises
    ------
    `RatioConditionViolated`
        If the axes fail the invariance-of-ratio condition.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    return stability_bounds(base, pert, params, cfg).metric_d


def stability_bounds(
    base: GeneralizedDataset,
    pert: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    /,
) -> StabilityBounds:
    """
    Evaluates every bound on the perturbation sizes, whether or not its precondition holds.

    Raises
    ------
    `RatioConditionViolated`
        If the axes fail the invariance-of-ratio condition.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    _require_ratio(base, pert)
    sizes = perturbation_sizes(base, pert)

    bound_xy = _independent_term(sizes.max_xy_manhattan, params, cfg)
    bound_z = _dependent_term(sizes.max_dz, params)
    bound_t = _hidden_term(sizes.max_dt, params)

    return StabilityBounds(
        bound_xy,
        bound_z,
        bound_t,
        _hidden_surface_term(sizes.max_dt, params),
        bound_t + bound_z + bound_xy,
    )


def _axis_matches(images: FloatArray, axis: FloatArray, /) -> bool:
    if images.shape != axis.shape:
        return False

    scale = max(1.0, float(np.max(np.abs(axis))))
    return bool(np.all(np.abs(images - axis) <= _GRID_MATCH * scale))


def empirical_sup_diff(
    model_f: IfsModel,
    model_g: IfsModel,
    /,
    rescale: RescaleMap | None = None,
    depth: int = 6,
    *,
    spec: SolverSpec | None = None,
) -> SupDiff:
    """
    Measures `sup|F1 - G1 o R|` and `sup|F2 - G2 o R|` over `model_f`'s depth-`depth` address grid.

    When `R` carries that grid onto `model_g`'s own address grid (always the case under the
    invariance-of-ratio condition) both surfaces are solved and compared sample by sample.
    Otherwise `G` is approximated at the `R`-images with `eval_points`.

    Parameters
    ----------
    model_f: `IfsModel`
        The reference surface.
    model_g: `IfsModel`
        The perturbed surface.
    rescale: `RescaleMap | None`
        `R`. Defaults to the identity on `model_f`'s grid.
    depth: `int`
        The address-grid depth.
    spec: `SolverSpec | None`
        Forwarded to the solvers.

    Raises
    ------
    `DomainMismatch`
        If an `R`-image falls outside `model_g`'s domain.
    """

    spec = spec or SolverSpec.from_environment()
    rescale = rescale or RescaleMap.identity(model_f.dataset)

    grid_f = solve_surface(model_f, depth, spec=spec)
    image_x, image_y = rescale.apply(grid_f.xs, grid_f.ys)

    g = model_g.dataset
    slack_x = _GRID_MATCH * max(1.0, float(np.max(np.abs(g.x))))
    slack_y = _GRID_MATCH * max(1.0, float(np.max(np.abs(g.y))))

    if (
        image_x[0] < g.x[0] - slack_x
        or image_x[-1] > g.x[-1] + slack_x
        or image_y[0] < g.y[0] - slack_y
        or image_y[-1] > g.y[-1] + slack_y
    ):
        raise DomainMismatch(
            f"R maps onto [{image_x[0]}, {image_x[-1]}] x [{image_y[0]}, {image_y[-1]}], "
            f"outside [{g.x[0]}, {g.x[-1]}] x [{g.y[0]}, {g.y[-1]}]"
        )

    if _axis_matches(image_x, address_axis(g.x, depth)) and _axis_matches(
        image_y, address_axis(g.y, depth)
    ):
        grid_g = solve_surface(model_g, depth, spec=spec)
        g1, g2 = grid_g.f1, grid_g.f2
    else:
        logger.debug("R-images miss G's address grid; evaluating G pointwise.")

        x = np.clip(image_x, g.x[0], g.x[-1])
        y = np.clip(image_y, g.y[0], g.y[-1])
        estimates = eval_points(model_g, x[:, None], y[None, :], spec=spec)
        g1, g2 = estimates.f1, estimates.f2

    return SupDiff(
        float(np.max(np.abs(grid_f.f1 - g1))),
        float(np.max(np.abs(grid_f.f2 - g2))),
    )


def direct_sup_diff(
    model_f: IfsModel,
    model_g: IfsModel,
    /,
    depth: int = 6,
    *,
    spec: SolverSpec | None = None,
) -> SupDiff:
    """
    Measures `sup|F1 - G1|` and `sup|F2 - G2|` at the points of `model_g`'s depth-`depth` address
    grid that lie in `model_f`'s domain. No rescaling is applied, so a moved grid shows up here
    even when `G o R` reproduces `F`.

    Raises
    ------
    `DomainMismatch`
        If no grid point of `model_g` lies in `model_f`'s domain.
    """

    spec = spec or SolverSpec.from_environment()
    grid_g = solve_surface(model_g, depth, spec=spec)

    f = model_f.dataset
    if f.same_axes(model_g.dataset):
        grid_f = solve_surface(model_f, depth, spec=spec)
        return SupDiff(
            float(np.max(np.abs(grid_f.f1 - grid_g.f1))),
            float(np.max(np.abs(grid_f.f2 - grid_g.f2))),
        )

    inside_x = (grid_g.xs >= f.x[0]) & (grid_g.xs <= f.x[-1])
    inside_y = (grid_g.ys >= f.y[0]) & (grid_g.ys <= f.y[-1])

    if not (inside_x.any() and inside_y.any()):
        raise DomainMismatch(
            f"no grid point of [{grid_g.xs[0]}, {grid_g.xs[-1]}] x [{grid_g.ys[0]}, {grid_g.ys[-1]}] "
            f"lies in [{f.x[0]}, {f.x[-1]}] x [{f.y[0]}, {f.y[-1]}]"
        )

    estimates = eval_points(
        model_f, grid_g.xs[inside_x][:, None], grid_g.ys[inside_y][None, :], spec=spec
    )
    window = np.ix_(inside_x, inside_y)

    return SupDiff(
        float(np.max(np.abs(estimates.f1 - grid_g.f1[window]))),
        float(np.max(np.abs(estimates.f2 - grid_g.f2[window]))),
    )


def verify_stability(
    base: GeneralizedDataset,
    pert: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    /,
    depth: int = 6,
    *,
    spec: SolverSpec | None = None,
) -> StabilityReport:
    """
    Computes every bound for a perturbation and checks the measured deviations against them.

    Deviations are measured twice: directly on the perturbed grid (`direct_sup_diff`) and after
    pulling `G` back through the rescale map (`empirical_sup_diff`). The bounds are checked against
    the direct measurement; on a fixed grid both agree.

    The dependent and hidden-variable bounds carry no free constant; whenever their preconditions
    hold (only `z`, resp. only `t`, changed), exceeding them by more than `1e-9` is a hard violation.
    Exceeding `bound_xy` or the full metric is a soft violation: it points at the calibration of
    `m_bar` and `delta`, and is logged as a warning.

    Raises
    ------
    `RatioConditionViolated`
        If the axes fail the invariance-of-ratio condition.
    `NonUniformParameters`
        If the parameters vary between cells.
    """

    rescale = build_rescale(base, pert)
    sizes = perturbation_sizes(base, pert)
    bounds = stability_bounds(base, pert, params, cfg)

    spec = spec or SolverSpec.from_environment()
    model_f, model_g = build_model(base, params), build_model(pert, params)
    measured = direct_sup_diff(model_f, model_g, depth, spec=spec)
    rescaled = empirical_sup_diff(model_f, model_g, rescale, depth, spec=spec)

    violations: list[Violation] = []
    same_axes = base.same_axes(pert)
    same_z = np.array_equal(base.z, pert.z)
    same_t = np.array_equal(base.t, pert.t)

    def check(bound: str, value: float, limit: float, hard: bool) -> None:
        if value > limit + VIOLATION_TOLERANCE:
            violations.append(Violation(bound, value, limit, hard))

    if same_axes and same_t:
        check("bound_z", measured.f1, bounds.bound_z, True)

    if same_axes and same_z:
        check("bound_t", measured.f1, bounds.bound_t, True)
        check("bound_t_hidden_surface", measured.f2, bounds.bound_t_hidden_surface, True)

    if same_z and same_t:
        check("bound_xy", measured.f1, bounds.bound_xy, False)

    check("metric_d", measured.f1, bounds.metric_d, False)

    for v in violations:
        if v.hard:
            logger.error("%s exceeded: measured %.6g > %.6g.", v.bound, v.measured, v.limit)
        else:
            logger.warning(
                "Measured %.6g exceeds %s=%.6g; m_bar=%g, delta=%g may be miscalibrated.",
                v.measured,
                v.bound,
                v.limit,
                cfg.m_bar,
                cfg.delta,
            )

    return StabilityReport(
        *bounds,
        measured.f1,
        measured.f2,
        rescaled.f1,
        rescaled.f2,
        sizes.max_xy_manhattan,
        sizes.max_dz,
        sizes.max_dt,
        tuple(violations),
    )


def _perturb_axis(
    axis: FloatArray, magnitude: float, rng: np.random.Generator, contained: bool, name: str, /
) -> FloatArray:
    length = axis[-1] - axis[0]

    if not 2 * magnitude < length:
        raise MagnitudeTooLarge(
            f"magnitude {magnitude} is at least half the length {length} of axis {name!r}"
        )

    if contained:
        start = axis[0] + rng.uniform(0, magnitude)
        end = axis[-1] - rng.uniform(0, magnitude)
    else:
        start = axis[0] + rng.uniform(-magnitude, magnitude)
        end = axis[-1] + rng.uniform(-magnitude, magnitude)

    out = start + (axis - axis[0]) * ((end - start) / length)
    out[0], out[-1] = start, end

    return out


def generate_perturbation(
    base: GeneralizedDataset,
    kind: PerturbationKind,
    magnitude: float,
    rng_seed: int,
    /,
    *,
    contained: bool = True,
) -> GeneralizedDataset:
    """
    Generates a seeded perturbation of a dataset that satisfies the invariance-of-ratio condition.

    `z` and `t` get independent uniform noise in `[-magnitude, magnitude]` per node. An axis gets a
    random affine reparametrization whose endpoints move by at most `magnitude`; affine maps are the
    only ones preserving the ratio condition. `"all"` perturbs `x`, `y`, `z` and `t` in that order
    from one generator.

    Parameters
    ----------
    base: `GeneralizedDataset`
        The dataset to perturb.
    kind: `PerturbationKind`
        What to perturb.
    magnitude: `float`
        The largest displacement of any value or node.
    rng_seed: `int`
        Seed of `numpy.random.default_rng`.
    contained: `bool`
        Move axis endpoints inward only, keeping the perturbed domain inside the base domain.

    Returns
    -------
    `GeneralizedDataset`
        The perturbed dataset.

    Raises
    ------
    `ValueError`
        If `magnitude` is not positive or `kind` is unknown.
    `MagnitudeTooLarge`
        If an axis would lose its monotonicity.
    """

    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}")

    if not (np.isfinite(magnitude) and magnitude > 0):
        raise ValueError(f"magnitude must be positive, got {magnitude}")

    rng = np.random.default_rng(rng_seed)
    x, y, z, t = base.x, base.y, base.z, base.t

    if kind in ("x", "all"):
        x = _perturb_axis(base.x, magnitude, rng, contained, "x")
    if kind in ("y", "all"):
        y = _perturb_axis(base.y, magnitude, rng, contained, "y")
    if kind in ("z", "all"):
        z = base.z + rng.uniform(-magnitude, magnitude, size=base.z.shape)
    if kind in ("t", "all"):
        t = base.t + rng.uniform(-magnitude, magnitude, size=base.t.shape)

    return base.replace(x=x, y=y, z=z, t=t)


def _campaign_run(
    base: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    spec: CampaignSpec,
    seed: int,
    /,
) -> StabilityReport:
    pert = generate_perturbation(
        base, spec.kind, spec.magnitude_for(seed), seed, contained=spec.contained
    )
    return verify_stability(base, pert, params, cfg, spec.depth, spec=SolverSpec.from_environment())


def run_campaign(
    base: GeneralizedDataset,
    params: IfsParameters,
    cfg: StabilityConfig,
    spec: CampaignSpec,
    /,
    *,
    on_report: Hook[[int, StabilityReport], None] | None = None,
) -> list[StabilityReport]:
    """
    Verifies one seeded perturbation per seed of `spec`, seeds spread over `spec.workers` threads.

    Returns
    -------
    `list[StabilityReport]`
        One report per seed, in seed order, independent of the worker count.
    """

    seeds: Sequence[int] = list(spec.seeds)
    reports = Executor(spec.workers).map(partial(_campaign_run, base, params, cfg, spec), seeds)

    for seed, report in zip(seeds, reports):
        logger.debug(
            "Seed %d (%s, magnitude %g): sup|F1-G1|=%.6g, d=%.6g%s.",
            seed,
            spec.kind,
            spec.magnitude_for(seed),
            report.empirical_sup_f1,
            report.metric_d,
            ", VIOLATED" if report.violated else "",
        )

        if on_report is not None:
            on_report.notify(seed, report)

    return reports
