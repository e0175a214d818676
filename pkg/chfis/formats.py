"""
Text formats: the chfis-v1 dataset format and the CSV/PGM surface-grid exports.

A chfis-v1 document starts with the magic line `chfis-v1`. Sections follow in any order, each a
keyword followed by its values up to the next keyword; `#` starts a comment.

```
chfis-v1
nx 2
ny 2
x 0 1 2
y 0 1 2
z 0.3 0.5 0.6  0.7 0.4 0.6  0.8 0.5 0.6   # row-major, row = x index
t 0.3 0.4 0.5  0.7 0.8 0.5  0.6 0.8 0.9
alpha 0.7      # or alpha_matrix with N*M values
beta 0.4
gamma 0.5
```
"""

from __future__ import annotations

import csv
import io
import textwrap
from collections.abc import Iterable
from dataclasses import dataclass
from typing import final

import numpy as np

from .core import GeneralizedDataset, IfsParameters, validate_dataset, validate_parameters
from .engine import SurfaceGrid
from .errors import DatasetSyntaxError, MissingParameter, ParameterConflict, ShapeMismatch
from .types import FloatArray
from .utils import as_float_array, readonly

__all__ = [
    "MAGIC",
    "ParameterEntry",
    "ParsedDataset",
    "parse_dataset",
    "read_grid_csv",
    "write_dataset",
    "write_grid_csv",
    "write_heightmap_pgm",
]

MAGIC = "chfis-v1"
CSV_HEADER = ("x", "y", "f1", "f2")
PGM_MAXVAL = 255
PGM_LINE_WIDTH = 70

_PARAMETERS = ("alpha", "beta", "gamma")
_KEYWORDS = frozenset(
    ("nx", "ny", "x", "y", "z", "t", *_PARAMETERS, *(f"{p}_matrix" for p in _PARAMETERS))
)
_REQUIRED = ("nx", "ny", "x", "y", "z", "t")

type ParameterValue = float | FloatArray | None


def _format(value: float, /) -> str:
    return f"{value:.17g}"


@final
@dataclass(slots=True, frozen=True)
class ParameterEntry:
    """Whichever of `alpha`, `beta` and `gamma` a source supplies, each a scalar, an `N x M` matrix or `None`."""

    alpha: ParameterValue = None
    beta: ParameterValue = None
    gamma: ParameterValue = None

    @property
    def is_empty(self) -> bool:
        return self.alpha is None and self.beta is None and self.gamma is None

    def override(
        self,
        *,
        alpha: float | None = None,
        beta: float | None = None,
        gamma: float | None = None,
    ) -> ParameterEntry:
        """
        Overrides scalar entries with flag values.

        Raises
        ------
        `ParameterConflict`
            If a flag targets a parameter given here as a per-cell matrix.
        """

        flags = {"alpha": alpha, "beta": beta, "gamma": gamma}
        merged: dict[str, ParameterValue] = {}

        for name, flag in flags.items():
            current: ParameterValue = getattr(self, name)

            if flag is not None and isinstance(current, np.ndarray):
                raise ParameterConflict(
                    f"--{name} conflicts with the per-cell {name}_matrix of the dataset file"
                )

            merged[name] = current if flag is None else flag

        return ParameterEntry(**merged)

    def resolve(self, n_cells_x: int, n_cells_y: int, /) -> IfsParameters:
        """
        Validates the entry into `IfsParameters`.

        Raises
        ------
        `MissingParameter`
            If a parameter is missing.
        """

        values = {name: getattr(self, name) for name in _PARAMETERS}

        if missing := [name for name, value in values.items() if value is None]:
            raise MissingParameter(
                f"no value for {', '.join(missing)}: add it to the dataset file or pass --{missing[0]}"
            )

        return validate_parameters(
            values["alpha"], values["beta"], values["gamma"], n_cells_x, n_cells_y
        )

    @classmethod
    def from_parameters(cls, params: IfsParameters, /) -> ParameterEntry:
        """Scalars if the parameters are uniform, matrices otherwise."""

        if params.is_uniform:
            return cls(*params.uniform())

        return cls(params.alpha, params.beta, params.gamma)


@final
@dataclass(slots=True, frozen=True)
class ParsedDataset:
    """A dataset and whatever parameters came with it."""

    dataset: GeneralizedDataset
    parameters: ParameterEntry

    def resolve(
        self,
        *,
        alpha: float | None = None,
        beta: float | None = None,
        gamma: float | None = None,
    ) -> IfsParameters:
        """The file's parameters, overridden by flags. See `ParameterEntry.override`."""

        return self.parameters.override(alpha=alpha, beta=beta, gamma=gamma).resolve(
            self.dataset.n_cells_x, self.dataset.n_cells_y
        )


@final
@dataclass(slots=True)
class _Section:
    line: int
    values: list[float]


def _tokens(text: str, /) -> Iterable[tuple[int, str]]:
    for number, line in enumerate(text.splitlines(), start=1):
        for token in line.split("#", 1)[0].split():
            yield (number, token)


def _count(name: str, section: _Section, expected: int, /) -> list[float]:
    if len(section.values) != expected:
        raise ShapeMismatch(
            f"section {name!r} (line {section.line}) has {len(section.values)} values, expected {expected}"
        )

    return section.values


def _cell_count(name: str, section: _Section, /) -> int:
    (value,) = _count(name, section, 1)

    if not (value.is_integer() and value >= 1):
        raise DatasetSyntaxError(section.line, f"{name} must be a positive integer, got {_format(value)}")

    return int(value)


def parse_dataset(text: str, /) -> ParsedDataset:
    """
    Parses a chfis-v1 document.

    Raises
    ------
    `DatasetSyntaxError`
        On a missing magic line, an unknown token, a value outside any section, a duplicate section
        or a missing required section.
    `ShapeMismatch`
        If a section holds the wrong number of values.
    `NonMonotoneAxis`, `NonFiniteValue`
        As raised by `validate_dataset`.
    """

    tokens = iter(_tokens(text))
    last_line = max(1, len(text.splitlines()))

    match next(tokens, None):
        case (_, token) if token == MAGIC:
            pass
        case (line, token):
            raise DatasetSyntaxError(line, f"expected the magic line {MAGIC!r}, got {token!r}")
        case None:
            raise DatasetSyntaxError(1, f"empty document, expected the magic line {MAGIC!r}")

    sections: dict[str, _Section] = {}
    current: _Section | None = None

    for line, token in tokens:
        if token in _KEYWORDS:
            if token in sections:
                raise DatasetSyntaxError(
                    line, f"duplicate section {token!r} (first on line {sections[token].line})"
                )

            base = token.removesuffix("_matrix")
            if (base != token and base in sections) or f"{token}_matrix" in sections:
                raise DatasetSyntaxError(line, f"{base} is given both as a scalar and as a matrix")

            current = sections[token] = _Section(line, [])
            continue

        try:
            value = float(token)
        except ValueError:
            raise DatasetSyntaxError(line, f"unknown token {token!r}") from None

        if current is None:
            raise DatasetSyntaxError(line, f"value {token!r} outside any section")

        current.values.append(value)

    if missing := [name for name in _REQUIRED if name not in sections]:
        raise DatasetSyntaxError(last_line, f"missing section {missing[0]!r}")

    nx = _cell_count("nx", sections["nx"])
    ny = _cell_count("ny", sections["ny"])
    nodes = (nx + 1) * (ny + 1)

    dataset = validate_dataset(
        _count("x", sections["x"], nx + 1),
        _count("y", sections["y"], ny + 1),
        _count("z", sections["z"], nodes),
        _count("t", sections["t"], nodes),
    )

    parameters: dict[str, ParameterValue] = {}

    for name in _PARAMETERS:
        if (section := sections.get(name)) is not None:
            (parameters[name],) = _count(name, section, 1)
        elif (section := sections.get(f"{name}_matrix")) is not None:
            values = _count(f"{name}_matrix", section, nx * ny)
            parameters[name] = readonly(as_float_array(values).reshape(nx, ny))

    return ParsedDataset(dataset, ParameterEntry(**parameters))


def write_dataset(
    dataset: GeneralizedDataset,
    /,
    parameters: IfsParameters | ParameterEntry | None = None,
) -> str:
    """
    Writes a chfis-v1 document with 17 significant digits, so parsing it back gives an equal dataset.

    Uniform `IfsParameters` are written as scalars, per-cell ones as matrices.
    """

    def row(values: Iterable[float]) -> str:
        return " ".join(_format(float(v)) for v in values)

    lines = [
        MAGIC,
        f"nx {dataset.n_cells_x}",
        f"ny {dataset.n_cells_y}",
        f"x {row(dataset.x)}",
        f"y {row(dataset.y)}",
        "z",
        *(row(r) for r in dataset.z),
        "t",
        *(row(r) for r in dataset.t),
    ]

    if isinstance(parameters, IfsParameters):
        parameters = ParameterEntry.from_parameters(parameters)

    if parameters is not None:
        for name in _PARAMETERS:
            match getattr(parameters, name):
                case None:
                    pass
                case np.ndarray() as matrix:
                    lines.append(f"{name}_matrix")
                    lines.extend(row(r) for r in matrix)
                case value:
                    lines.append(f"{name} {_format(float(value))}")

    return "\n".join(lines) + "\n"


def write_grid_csv(grid: SurfaceGrid, /) -> str:
    """Writes `x,y,f1,f2` rows sorted by `x` then `y`, values with 17 significant digits."""

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)

    for i, x in enumerate(grid.xs):
        for j, y in enumerate(grid.ys):
            writer.writerow(
                (
                    _format(float(x)),
                    _format(float(y)),
                    _format(float(grid.f1[i, j])),
                    _format(float(grid.f2[i, j])),
                )
            )

    return buffer.getvalue()


def read_grid_csv(text: str, /) -> SurfaceGrid:
    """
    Reads a grid written by `write_grid_csv`. The depth is not recorded, so it comes back as `None`.

    Raises
    ------
    `DatasetSyntaxError`
        On a bad header or a non-numeric field.
    `ShapeMismatch`
        If the rows do not form a full grid sorted by `x` then `y`.
    """

    reader = csv.reader(io.StringIO(text))

    if tuple(header := next(reader, [])) != CSV_HEADER:
        raise DatasetSyntaxError(1, f"expected the header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")

    rows: list[tuple[float, float, float, float]] = []

    for number, fields in enumerate(reader, start=2):
        if not fields:
            continue

        if len(fields) != 4:
            raise DatasetSyntaxError(number, f"expected 4 fields, got {len(fields)}")

        try:
            x, y, f1, f2 = map(float, fields)
        except ValueError as e:
            raise DatasetSyntaxError(number, str(e)) from None

        rows.append((x, y, f1, f2))

    if not rows:
        raise ShapeMismatch("the grid has no rows")

    data = np.array(rows, dtype=np.float64)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])

    if len(data) != len(xs) * len(ys):
        raise ShapeMismatch(f"{len(data)} rows do not form a {len(xs)} x {len(ys)} grid")

    expected_x = np.repeat(xs, len(ys))
    expected_y = np.tile(ys, len(xs))

    if not (np.array_equal(data[:, 0], expected_x) and np.array_equal(data[:, 1], expected_y)):
        raise ShapeMismatch("rows are not a full grid sorted by x then y")

    shape = (len(xs), len(ys))

    return SurfaceGrid(
        None,
        readonly(xs),
        readonly(ys),
        readonly(data[:, 2].reshape(shape).copy()),
        readonly(data[:, 3].reshape(shape).copy()),
    )


def write_heightmap_pgm(grid: SurfaceGrid, /) -> bytes:
    """
    Renders `F1` as an ASCII PGM (`P2`) heightmap, larger `y` up.

    Pixels are `(f1 - min) / (max - min) * 255` rounded half up; a constant surface is all zeros.
    """

    f1 = grid.f1
    low = float(np.min(f1))
    span = float(np.max(f1)) - low

    if span > 0:
        pixels = np.floor((f1 - low) / span * PGM_MAXVAL + 0.5).astype(np.int64)
    else:
        pixels = np.zeros(f1.shape, dtype=np.int64)

    width, height = grid.shape
    lines = ["P2", f"{width} {height}", str(PGM_MAXVAL)]

    # image rows run top-down, i.e. from the last y to the first
    for j in reversed(range(height)):
        lines.extend(textwrap.wrap(" ".join(map(str, pixels[:, j])), width=PGM_LINE_WIDTH))

    return ("\n".join(lines) + "\n").encode("ascii")
