"""Bundled sample datasets: a 3 x 3 generalized interpolation dataset and its perturbations."""

from __future__ import annotations

from functools import cache
from importlib.resources import files

from .errors import UnknownSample
from .formats import ParsedDataset, parse_dataset

__all__ = ["SAMPLE_NAMES", "load_sample", "sample_text"]

SAMPLE_NAMES = (
    "table1",
    "case_ia",
    "case_ib",
    "case_iia",
    "case_iib",
    "case_iiia",
    "case_iiib",
    "combined_a",
    "combined_b",
)
"""
`table1` is the base dataset. The `a` cases move it by at most 0.001, the `b` cases by at most 0.1:
`case_i*` the axes, `case_ii*` the `z` values, `case_iii*` the `t` values. `combined_*` applies all
three at once. Every sample carries `alpha 0.7`, `beta 0.4` and `gamma 0.5`.
"""


def sample_text(name: str, /) -> str:
    """
    The chfis-v1 source of a bundled sample.

    Raises
    ------
    `UnknownSample`
        If `name` is not in `SAMPLE_NAMES`.
    """

    if name not in SAMPLE_NAMES:
        raise UnknownSample(f"no sample named {name!r}, expected one of {', '.join(SAMPLE_NAMES)}")

    return files("chfis").joinpath("data", f"{name}.chfis").read_text(encoding="utf-8")


@cache
def load_sample(name: str, /) -> ParsedDataset:
    """Parses a bundled sample. See `sample_text`."""

    return parse_dataset(sample_text(name))
