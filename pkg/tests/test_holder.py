from __future__ import annotations

import numpy as np
import pytest

from chfis import GeneralizedDataset, IfsModel, build_model, estimate_holder, solve_surface, validate_parameters
from chfis.errors import InsufficientSamples
from chfis.holder import fit_holder
from chfis.spec import SolverSpec


def test_fit_recovers_a_power_law() -> None:
    d = np.geomspace(1e-3, 1.0, 50)
    estimate = fit_holder(d, 2.0 * d**0.5)

    assert estimate.delta == pytest.approx(0.5)
    assert estimate.prefactor == pytest.approx(2.0)
    assert estimate.pairs_used == 50


def test_fit_drops_uninformative_pairs() -> None:
    d = np.array([0.0, 0.1, 0.2, 0.4, 0.8])
    diff = np.array([0.3, 0.0, 0.2, 0.4, 0.8])

    assert fit_holder(d, diff).pairs_used == 3


def test_fit_clamps_to_one() -> None:
    d = np.geomspace(1e-2, 1.0, 10)

    assert fit_holder(d, d**2).delta == 1.0


def test_fit_needs_distinct_distances() -> None:
    with pytest.raises(InsufficientSamples):
        fit_holder([0.1, 0.1, 0.1], [0.2, 0.3, 0.4])

    with pytest.raises(InsufficientSamples):
        fit_holder([0.1, 0.0], [0.2, 0.3])


@pytest.mark.parametrize("depth", [5, 8, 10])
@pytest.mark.parametrize("rng_seed", range(5))
def test_smooth_limit_is_lipschitz(table1: GeneralizedDataset, depth: int, rng_seed: int) -> None:
    model = build_model(table1, validate_parameters(0.0, 0.0, 0.0, 2, 2))
    grid = solve_surface(model, depth, spec=SolverSpec())

    estimate = estimate_holder(grid, 2000, rng_seed)

    assert estimate.delta == pytest.approx(1.0, abs=0.05)
    assert estimate.pairs_used > 1000


def test_rough_surface_exponent_in_range(table1_model: IfsModel) -> None:
    grid = solve_surface(table1_model, 8, spec=SolverSpec())
    estimate = estimate_holder(grid, 500, 7)

    assert 0 < estimate.delta <= 1
    assert estimate.prefactor > 0
    assert estimate == estimate_holder(grid, 500, 7)


def test_too_few_pairs(table1_model: IfsModel) -> None:
    grid = solve_surface(table1_model, 8, spec=SolverSpec())

    with pytest.raises(InsufficientSamples):
        estimate_holder(grid, 99)


def test_too_shallow(table1_model: IfsModel) -> None:
    with pytest.raises(InsufficientSamples):
        estimate_holder(solve_surface(table1_model, 2, spec=SolverSpec()))


def test_flat_surface_has_no_usable_pairs(constant_model: IfsModel) -> None:
    with pytest.raises(InsufficientSamples):
        estimate_holder(solve_surface(constant_model, 5, spec=SolverSpec()))
