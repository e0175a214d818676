from __future__ import annotations

import numpy as np
import pytest

from chfis import SAMPLE_NAMES, load_sample
from chfis.errors import UnknownSample


@pytest.mark.parametrize("name", SAMPLE_NAMES)
def test_every_sample_loads(name: str) -> None:
    parsed = load_sample(name)

    assert parsed.dataset.shape == (3, 3)
    assert parsed.resolve().uniform() == (0.7, 0.4, 0.5)


def test_combined_samples_combine_the_cases() -> None:
    for suffix in ("a", "b"):
        combined = load_sample(f"combined_{suffix}").dataset

        assert np.array_equal(combined.x, load_sample(f"case_i{suffix}").dataset.x)
        assert np.array_equal(combined.z, load_sample(f"case_ii{suffix}").dataset.z)
        assert np.array_equal(combined.t, load_sample(f"case_iii{suffix}").dataset.t)


def test_unknown_sample() -> None:
    with pytest.raises(UnknownSample, match="table1"):
        load_sample("table2")

    with pytest.raises(LookupError):
        load_sample("../pyproject")
