from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chfis import GeneralizedDataset, IfsParameters, Point2, manhattan_distance, validate_dataset, validate_parameters
from chfis.errors import (
    ChfisError,
    ContractionViolated,
    MixedParameterEntry,
    NonFiniteValue,
    NonMonotoneAxis,
    NonUniformParameters,
    ShapeMismatch,
)

from .conftest import TABLE1_T, TABLE1_Z

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
points = st.builds(Point2, finite, finite)


def test_table1_loads_as_3x3(table1: GeneralizedDataset) -> None:
    assert table1.shape == (3, 3)
    assert (table1.n_cells_x, table1.n_cells_y) == (2, 2)
    assert table1.z[0, 0] == 0.3
    assert table1.t[2, 2] == 0.9


def test_flat_values_are_row_major(table1: GeneralizedDataset) -> None:
    flat = validate_dataset([0, 1, 2], [0, 1, 2], np.ravel(TABLE1_Z), np.ravel(TABLE1_T))

    assert flat == table1
    assert flat.z[1, 0] == 0.7


def test_dataset_is_frozen(table1: GeneralizedDataset) -> None:
    with pytest.raises(ValueError):
        table1.z[0, 0] = 1.0


def test_equal_datasets_hash_equal(table1: GeneralizedDataset) -> None:
    again = validate_dataset([0, 1, 2], [0, 1, 2], TABLE1_Z, TABLE1_T)

    assert again == table1
    assert hash(again) == hash(table1)
    assert again != table1.replace(z=np.zeros((3, 3)))


def test_replace_validates(table1: GeneralizedDataset) -> None:
    with pytest.raises(NonMonotoneAxis):
        table1.replace(x=[0, 2, 1])


@pytest.mark.parametrize(
    ("x", "y", "z", "error"),
    [
        ([0, 1, 1], [0, 1, 2], TABLE1_Z, NonMonotoneAxis),
        ([0, 2, 1], [0, 1, 2], TABLE1_Z, NonMonotoneAxis),
        ([0], [0, 1, 2], [[0.3, 0.5, 0.6]], ShapeMismatch),
        ([0, 1, 2], [0, 1, 2], np.ravel(TABLE1_Z)[:8], ShapeMismatch),
        ([0, 1, 2], [0, 1, 2], [[0.3, 0.5], [0.7, 0.4], [0.8, 0.5]], ShapeMismatch),
        ([0, math.nan, 2], [0, 1, 2], TABLE1_Z, NonFiniteValue),
        ([0, 1, 2], [0, 1, math.inf], TABLE1_Z, NonFiniteValue),
        ([0, 1, 2], [0, 1, 2], [[0.3, 0.5, 0.6], [0.7, math.nan, 0.6], [0.8, 0.5, 0.6]], NonFiniteValue),
    ],
)
def test_invalid_datasets(x: list[float], y: list[float], z: list[list[float]], error: type[Exception]) -> None:
    with pytest.raises(error) as info:
        validate_dataset(x, y, z, TABLE1_T)

    assert isinstance(info.value, ChfisError)
    assert isinstance(info.value, ValueError)


def test_scalar_parameters_broadcast() -> None:
    params = validate_parameters(0.7, 0.4, 0.5, 2, 3)

    assert params.n_cells == (2, 3)
    assert params.is_uniform
    assert params.uniform() == (0.7, 0.4, 0.5)
    assert params.cell(2, 3) == (0.7, 0.4, 0.5)


def test_broadcast_matches_validation() -> None:
    assert IfsParameters.broadcast(0.7, 0.4, 0.5, 2, 3) == validate_parameters(0.7, 0.4, 0.5, 2, 3)


def test_matrix_parameters() -> None:
    alpha = [[0.1, 0.2], [0.3, 0.4]]
    params = validate_parameters(alpha, np.zeros((2, 2)), np.full((2, 2), 0.5), 2, 2)

    assert not params.is_uniform
    assert params.cell(2, 1) == (0.3, 0.0, 0.5)
    assert params.max_abs_alpha == 0.4

    with pytest.raises(NonUniformParameters):
        params.uniform()


def test_flat_matrix_parameters_are_row_major() -> None:
    params = validate_parameters([0.1, 0.2, 0.3, 0.4], [0, 0, 0, 0], [0, 0, 0, 0], 2, 2)

    assert params.cell(1, 2)[0] == 0.2


def test_mixed_parameters() -> None:
    with pytest.raises(MixedParameterEntry):
        validate_parameters(0.7, np.zeros((2, 2)), 0.5, 2, 2)


def test_parameter_matrix_shape() -> None:
    with pytest.raises(ShapeMismatch):
        validate_parameters(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((2, 3)), 2, 2)


def test_non_finite_parameter() -> None:
    with pytest.raises(NonFiniteValue):
        validate_parameters(math.nan, 0.1, 0.1, 2, 2)


@pytest.mark.parametrize(
    ("alpha", "beta", "gamma", "constraint"),
    [
        (1.0, 0.1, 0.1, "|alpha|<1"),
        (-1.2, 0.1, 0.1, "|alpha|<1"),
        (0.5, 0.1, 1.0, "|gamma|<1"),
        (0.7, 0.6, 0.5, "|beta|+|gamma|<1"),
        (0.7, -0.5, 0.5, "|beta|+|gamma|<1"),
    ],
)
def test_contraction_constraints(alpha: float, beta: float, gamma: float, constraint: str) -> None:
    with pytest.raises(ContractionViolated) as info:
        validate_parameters(alpha, beta, gamma, 2, 2)

    assert info.value.cell == (1, 1)
    assert info.value.constraint == constraint


def test_contraction_names_first_bad_cell() -> None:
    beta = np.array([[0.1, 0.1], [0.6, 0.9]])

    with pytest.raises(ContractionViolated) as info:
        validate_parameters(np.zeros((2, 2)), beta, np.full((2, 2), 0.5), 2, 2)

    assert info.value.cell == (2, 1)
    assert "(2, 1)" in str(info.value)


def test_point_rejects_non_finite() -> None:
    with pytest.raises(NonFiniteValue):
        Point2(math.nan, 0.0)


def test_manhattan_distance() -> None:
    assert manhattan_distance(Point2(0, 0), Point2(1, -2)) == 3


@given(points, points)
def test_manhattan_is_symmetric(a: Point2, b: Point2) -> None:
    assert manhattan_distance(a, b) == manhattan_distance(b, a)
    assert manhattan_distance(a, a) == 0


@given(points, points, points)
def test_manhattan_triangle_inequality(a: Point2, b: Point2, c: Point2) -> None:
    assert manhattan_distance(a, c) <= manhattan_distance(a, b) + manhattan_distance(b, c) + 1e-6
