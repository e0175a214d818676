"""Empirical Lipschitz (Hölder) exponent of a sampled surface."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import final

import numpy as np
from scipy.stats import linregress

from .engine import SurfaceGrid
from .errors import InsufficientSamples
from .types import ArrayLike
from .utils import as_float_array, clamp

__all__ = [
    "HolderEstimate",
    "MIN_SAMPLE_PAIRS",
    "estimate_holder",
    "fit_holder",
]

logger = logging.getLogger(__name__)

MIN_SAMPLE_PAIRS = 100
_MIN_DEPTH = 3
_STEP = 2

# every integer step with Manhattan length `_STEP`
_DIRECTIONS = np.array(
    [(dx, dy) for dx in range(-_STEP, _STEP + 1) for dy in range(-_STEP, _STEP + 1) if abs(dx) + abs(dy) == _STEP],
    dtype=np.intp,
)


@final
@dataclass(slots=True, frozen=True)
class HolderEstimate:
    """`|F1(X) - F1(X')| ~ prefactor * d(X, X')**delta`, fitted in log-log space."""

    delta: float
    """The exponent, clamped to `(0, 1]`."""

    prefactor: float
    pairs_used: int
    """How many pairs survived the exclusion of zero distances and zero differences."""


def fit_holder(distances: ArrayLike, differences: ArrayLike, /) -> HolderEstimate:
    """
    Fits `log(differences)` against `log(distances)` by least squares.

    Pairs with a zero distance or a zero difference carry no information and are dropped.

    Raises
    ------
    `InsufficientSamples`
        If fewer than two usable pairs remain, or they all share one distance.
    """

    d = as_float_array(distances).ravel()
    diff = as_float_array(differences).ravel()

    if d.shape != diff.shape:
        raise ValueError(f"got {d.size} distances but {diff.size} differences")

    usable = np.isfinite(d) & np.isfinite(diff) & (d > 0) & (diff > 0)
    used = int(np.count_nonzero(usable))

    if used < 2:
        raise InsufficientSamples(f"only {used} usable sample pairs, need at least 2")

    log_d = np.log(d[usable])

    if np.all(log_d == log_d[0]):
        raise InsufficientSamples("every usable sample pair has the same distance")

    fit = linregress(log_d, np.log(diff[usable]))

    return HolderEstimate(
        clamp(float(fit.slope), math.ulp(0.0), 1.0),
        math.exp(float(fit.intercept)),
        used,
    )


def estimate_holder(
    grid: SurfaceGrid,
    /,
    sample_pairs: int = 2000,
    rng_seed: int = 0,
) -> HolderEstimate:
    """
    Estimates the Lipschitz exponent of `F1` from seeded random pairs of grid samples.

    Each pair gets a start point and a direction of Manhattan length 2 (in grid steps), and is
    measured at every scale the grid resolves, the direction stretched by `2**s`. Per scale, the
    pairs are reduced to one point: the median log distance, and the median log difference at the
    finest scale plus the median growth of each pair's log difference since then. Pairs that
    straddle a crease or sit on a level line skew a plain fit; the medians ignore them. The top
    scale stays within 1/16 of the grid.

    Parameters
    ----------
    grid: `SurfaceGrid`
        A solved surface of depth at least 3.
    sample_pairs: `int`
        How many pairs to draw, at least 100. Each one is measured once per scale.
    rng_seed: `int`
        Seed of `numpy.random.default_rng`. Equal seeds give bitwise-equal estimates.

    Returns
    -------
    `HolderEstimate`
        The fitted exponent and prefactor. `pairs_used` counts the pairs that moved at every scale.

    Raises
    ------
    `InsufficientSamples`
        If the grid is too shallow, `sample_pairs` is below 100 or too few pairs are usable.
    """

    if sample_pairs < MIN_SAMPLE_PAIRS:
        raise InsufficientSamples(
            f"{sample_pairs} sample pairs requested, need at least {MIN_SAMPLE_PAIRS}"
        )

    if grid.depth is not None and grid.depth < _MIN_DEPTH:
        raise InsufficientSamples(f"grid depth {grid.depth} is below {_MIN_DEPTH}")

    p, q = grid.shape
    resolution = min(p, q) - 1
    scales = max(2, int(math.log2(max(resolution, 1))) - 4)
    reach = _STEP * 2 ** (scales - 1)

    if reach > resolution:
        raise InsufficientSamples(f"a {p} x {q} grid is too coarse for an estimate")

    rng = np.random.default_rng(rng_seed)

    steps = _DIRECTIONS[rng.integers(0, len(_DIRECTIONS), size=sample_pairs)]
    far = steps * 2 ** (scales - 1)

    # start points from which even the top scale stays on the grid
    i = rng.integers(np.maximum(0, -far[:, 0]), p - np.maximum(0, far[:, 0]))
    j = rng.integers(np.maximum(0, -far[:, 1]), q - np.maximum(0, far[:, 1]))

    distances = np.empty((scales, sample_pairs))
    differences = np.empty((scales, sample_pairs))

    for s in range(scales):
        i2 = i + steps[:, 0] * 2**s
        j2 = j + steps[:, 1] * 2**s

        distances[s] = np.abs(grid.xs[i] - grid.xs[i2]) + np.abs(grid.ys[j] - grid.ys[j2])
        differences[s] = np.abs(grid.f1[i, j] - grid.f1[i2, j2])

    usable = np.all(np.isfinite(differences) & (differences > 0) & (distances > 0), axis=0)
    used = int(np.count_nonzero(usable))

    if used < 2:
        raise InsufficientSamples(f"only {used} usable sample pairs, need at least 2")

    log_d = np.log(distances[:, usable])
    log_diff = np.log(differences[:, usable])

    typical_d = np.median(log_d, axis=1)
    typical_diff = np.median(log_diff[0]) + np.median(log_diff - log_diff[0], axis=1)

    fit = fit_holder(np.exp(typical_d), np.exp(typical_diff))
    estimate = HolderEstimate(fit.delta, fit.prefactor, used)

    logger.debug(
        "Holder fit over %d scales: delta=%.4f, prefactor=%.4g, %d pairs used.",
        scales,
        estimate.delta,
        estimate.prefactor,
        estimate.pairs_used,
    )

    return estimate
