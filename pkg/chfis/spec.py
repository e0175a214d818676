"""Specs, i.e. configuration fixed before a solve, a bound computation or a campaign."""

from __future__ import annotations

import logging
import os
from collections.abc import Sequence
from dataclasses import KW_ONLY, dataclass, field
from typing import Self, final

from .types import PerturbationKind

__all__ = [
    "CampaignSpec",
    "DEFAULT_MAX_DEPTH",
    "MAX_DEPTH_ENV",
    "SolverSpec",
    "StabilityConfig",
]

logger = logging.getLogger(__name__)

MAX_DEPTH_ENV = "CHFIS_MAX_DEPTH"
DEFAULT_MAX_DEPTH = 12


def _max_depth_from_environment() -> int:
    raw = os.environ.get(MAX_DEPTH_ENV)

    if raw is None:
        return DEFAULT_MAX_DEPTH

    try:
        value = int(raw)
    except ValueError:
        value = -1

    if value < 0:
        logger.warning(
            "Ignoring %s=%r: expected a nonnegative integer.", MAX_DEPTH_ENV, raw
        )
        return DEFAULT_MAX_DEPTH

    return value


@final
@dataclass(slots=True, frozen=True)
class StabilityConfig:
    """
    The constants of the independent-variable bound, i.e. the Lipschitz prefactor and exponent of the surface.\n
    Their existence is proved but their values are not; the defaults are a calibration that reproduces the
    published error table exactly, not a derived result.
    """

    _: KW_ONLY

    m_bar: float = 1.3
    """The Lipschitz prefactor. Must be positive."""

    delta: float = 1.0
    """The Lipschitz exponent. Must lie in `(0, 1]`."""

    def __post_init__(self) -> None:
        if not self.m_bar > 0:
            raise ValueError(f"m_bar must be positive, got {self.m_bar}")

        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")


@final
@dataclass(slots=True, frozen=True)
class SolverSpec:
    """Defines how surfaces are solved and evaluated."""

    _: KW_ONLY

    max_depth: int = DEFAULT_MAX_DEPTH
    """The deepest address grid `solve_surface` will build. A 2x2-cell grid at depth 12 holds about 6.7e7 samples."""

    workers: int = 1
    """Number of threads evaluating cell blocks. Results do not depend on it."""

    eval_depth: int = 30
    """Default address-expansion depth for `eval_point`."""

    snap_tolerance: float = 1e-10
    """Pre-images closer than this fraction of the axis length to a node are snapped onto it."""

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be nonnegative, got {self.max_depth}")

        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

        if self.eval_depth < 0:
            raise ValueError(f"eval_depth must be nonnegative, got {self.eval_depth}")

    @classmethod
    def from_environment(cls, /, *, workers: int = 1) -> Self:
        """Creates a `SolverSpec` whose depth cap is read from `CHFIS_MAX_DEPTH`, if set."""

        return cls(max_depth=_max_depth_from_environment(), workers=workers)


@final
@dataclass(slots=True, frozen=True)
class CampaignSpec:
    """Defines a seeded perturbation campaign, one perturbed dataset per seed."""

    kind: PerturbationKind
    """Which variables are perturbed."""

    _: KW_ONLY

    magnitudes: Sequence[float] = (0.001, 0.01, 0.1)
    """Perturbation magnitudes, cycled through by seed."""

    seeds: Sequence[int] = field(default_factory=lambda: range(100))
    """The seeds to run. Each seed yields one report."""

    depth: int = 6
    """Address-grid depth at which surfaces are compared."""

    workers: int = 1
    """Number of threads running seeds. Results do not depend on it."""

    contained: bool = True
    """Whether axis perturbations keep the perturbed domain inside the original one."""

    def __post_init__(self) -> None:
        if not self.magnitudes:
            raise ValueError("A campaign needs at least one magnitude.")

        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    def magnitude_for(self, seed: int, /) -> float:
        """The magnitude used for `seed`."""

        return self.magnitudes[seed % len(self.magnitudes)]
