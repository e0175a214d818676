from __future__ import annotations

import numpy as np
import pytest

from chfis import (
    GeneralizedDataset,
    IfsModel,
    IfsParameters,
    build_model,
    load_sample,
    validate_dataset,
    validate_parameters,
)
from chfis.spec import MAX_DEPTH_ENV, SolverSpec, StabilityConfig

TABLE1_Z = [[0.3, 0.5, 0.6], [0.7, 0.4, 0.6], [0.8, 0.5, 0.6]]
TABLE1_T = [[0.3, 0.4, 0.5], [0.7, 0.8, 0.5], [0.6, 0.8, 0.9]]


@pytest.fixture(autouse=True)
def _no_depth_override(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(MAX_DEPTH_ENV, raising=False)


@pytest.fixture
def table1() -> GeneralizedDataset:
    return load_sample("table1").dataset


@pytest.fixture
def table1_params() -> IfsParameters:
    return validate_parameters(0.7, 0.4, 0.5, 2, 2)


@pytest.fixture
def table1_model(table1: GeneralizedDataset, table1_params: IfsParameters) -> IfsModel:
    return build_model(table1, table1_params)


@pytest.fixture
def calibration() -> StabilityConfig:
    return StabilityConfig(m_bar=1.3, delta=1.0)


@pytest.fixture
def solver() -> SolverSpec:
    return SolverSpec(max_depth=10)


@pytest.fixture
def constant_model() -> IfsModel:
    """Constant `z = 0.5`, `t = 0.25` with dyadic parameters, so every solver is exact."""

    dataset = validate_dataset([0, 1, 2], [0, 1, 2], np.full((3, 3), 0.5), np.full((3, 3), 0.25))
    return build_model(dataset, validate_parameters(0.5, 0.25, 0.5, 2, 2))
