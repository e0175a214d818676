"""
The `chfis` command line.

Results go to stdout (or `--out`), diagnostics to stderr. Exit codes: 0 success, 1 invalid input,
2 a violated stability bound, 3 an internal error.

A data source is either a path to a chfis-v1 file or `sample:NAME` for a bundled sample.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, NoReturn, override

import numpy as np

from . import __version__
from .core import IfsParameters
from .engine import SurfaceGrid, build_model, eval_point, solve_surface, verify_joinup
from .errors import ChfisError
from .formats import (
    ParsedDataset,
    parse_dataset,
    read_grid_csv,
    write_dataset,
    write_grid_csv,
    write_heightmap_pgm,
)
from .holder import estimate_holder
from .hook import Hook
from .samples import SAMPLE_NAMES, load_sample
from .spec import CampaignSpec, SolverSpec, StabilityConfig
from .stability import (
    StabilityReport,
    generate_perturbation,
    run_campaign,
    stability_bounds,
    verify_stability,
)
from .types import GRID_FORMATS, PERTURBATION_KINDS, GridFormat

__all__ = ["main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2
EXIT_INTERNAL = 3

SAMPLE_PREFIX = "sample:"
STDOUT = "-"

type Record = dict[str, Any]


class UsageError(ChfisError):
    """The command line itself is malformed."""


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for violated bounds
    @override
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _cell(text: str, /) -> tuple[int, int]:
    try:
        n, m = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a cell as 'n,m', got {text!r}") from None

    return (n, m)


def _positive_int(text: str, /) -> int:
    value = int(text)

    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")

    return value


def _load(source: str, /) -> ParsedDataset:
    if source.startswith(SAMPLE_PREFIX):
        return load_sample(source.removeprefix(SAMPLE_PREFIX))

    return parse_dataset(Path(source).read_text(encoding="utf-8"))


def _parameters(args: argparse.Namespace, parsed: ParsedDataset, /) -> IfsParameters:
    return parsed.resolve(alpha=args.alpha, beta=args.beta, gamma=args.gamma)


def _emit(out: str, payload: str | bytes, /) -> None:
    if out == STDOUT:
        if isinstance(payload, bytes):
            sys.stdout.flush()
            sys.stdout.buffer.write(payload)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(payload)
        return

    path = Path(out)

    if isinstance(payload, bytes):
        path.write_bytes(payload)
    else:
        path.write_text(payload, encoding="utf-8", newline="")

    logger.info("Wrote %s.", path)


def _export(grid: SurfaceGrid, fmt: GridFormat, out: str, /) -> None:
    _emit(out, write_heightmap_pgm(grid) if fmt == "pgm" else write_grid_csv(grid))


def _print_values(values: dict[str, float], spec: str, /) -> None:
    for name, value in values.items():
        print(f"{name} {value:{spec}}")


def _cmd_solve(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    model = build_model(parsed.dataset, _parameters(args, parsed))

    on_level = Hook[[int, int, int], None]()
    on_level += lambda level, nx, ny: logger.info("Level %d of %d: %d x %d samples.", level, args.depth, nx, ny)

    grid = solve_surface(
        model, args.depth, spec=SolverSpec.from_environment(workers=args.workers), on_level=on_level
    )
    _export(grid, args.format, args.out)

    records.append({"command": "solve", "depth": args.depth, "shape": list(grid.shape)})
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    model = build_model(parsed.dataset, _parameters(args, parsed))
    estimate = eval_point(model, args.x, args.y, args.depth)

    values = {
        "f1": estimate.f1,
        "f2": estimate.f2,
        "error_f1": estimate.error_f1,
        "error_f2": estimate.error_f2,
    }
    _print_values(values, ".17g")

    records.append({"command": "eval", "x": args.x, "y": args.y} | values)
    return EXIT_OK


def _cmd_coeffs(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    model = build_model(parsed.dataset, _parameters(args, parsed))
    c = model.coefficients(*args.cell)

    names = ("e", "f", "g", "k", "e_tilde", "f_tilde", "g_tilde", "k_tilde")
    values = dict(zip(names, c.as_tuple(), strict=True)) | {"z_eva": c.z_eva, "t_eva": c.t_eva}
    _print_values(values, ".17g")

    records.append({"command": "coeffs", "cell": list(args.cell)} | values)
    return EXIT_OK


def _cmd_check(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    model = build_model(parsed.dataset, _parameters(args, parsed))

    residual = max(
        abs(r) for cell in model.cells for pair in verify_joinup(model, cell) for r in pair
    )
    print(f"ok {model.n_cells_x}x{model.n_cells_y} cells, max join-up residual {residual:.3g}")

    records.append({"command": "check", "cells": [model.n_cells_x, model.n_cells_y], "max_joinup_residual": residual})
    return EXIT_OK


def _pair(args: argparse.Namespace, /) -> tuple[ParsedDataset, ParsedDataset, IfsParameters, StabilityConfig]:
    base = _load(args.base)
    pert = _load(args.perturbed)

    return (base, pert, _parameters(args, base), StabilityConfig(m_bar=args.mbar, delta=args.delta))


def _cmd_bounds(args: argparse.Namespace, records: list[Record], /) -> int:
    base, pert, params, cfg = _pair(args)
    bounds = stability_bounds(base.dataset, pert.dataset, params, cfg)

    _print_values(bounds._asdict(), ".4f")

    records.append({"command": "bounds"} | bounds._asdict())
    return EXIT_OK


def _exit_for(reports: Sequence[StabilityReport], strict: bool, /) -> int:
    failed = any(r.violated if strict else r.hard_violations for r in reports)
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_verify(args: argparse.Namespace, records: list[Record], /) -> int:
    base, pert, params, cfg = _pair(args)
    report = verify_stability(
        base.dataset,
        pert.dataset,
        params,
        cfg,
        args.depth,
        spec=SolverSpec.from_environment(workers=args.workers),
    )

    fields = report.to_dict()
    _print_values({k: v for k, v in fields.items() if isinstance(v, float)}, ".6g")

    for v in report.violations:
        print(f"violated {v.bound} {v.measured:.6g} > {v.limit:.6g}{'' if v.hard else ' (soft)'}")

    records.append({"command": "verify"} | fields)
    return _exit_for([report], args.strict)


def _cmd_perturb(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    pert = generate_perturbation(
        parsed.dataset, args.kind, args.magnitude, args.rng_seed, contained=not args.uncontained
    )
    _emit(args.out, write_dataset(pert, parsed.parameters))

    records.append(
        {"command": "perturb", "kind": args.kind, "magnitude": args.magnitude, "rng_seed": args.rng_seed}
    )
    return EXIT_OK


def _cmd_export(args: argparse.Namespace, records: list[Record], /) -> int:
    grid = read_grid_csv(Path(args.grid).read_text(encoding="utf-8"))
    _export(grid, args.format, args.out)

    records.append({"command": "export", "format": args.format, "shape": list(grid.shape)})
    return EXIT_OK


def _cmd_holder(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    model = build_model(parsed.dataset, _parameters(args, parsed))
    grid = solve_surface(model, args.depth, spec=SolverSpec.from_environment(workers=args.workers))
    estimate = estimate_holder(grid, args.pairs, args.rng_seed)

    print(f"delta {estimate.delta:.4f}")
    print(f"prefactor {estimate.prefactor:.6g}")
    print(f"pairs_used {estimate.pairs_used}")

    records.append(
        {
            "command": "holder",
            "delta": estimate.delta,
            "prefactor": estimate.prefactor,
            "pairs_used": estimate.pairs_used,
        }
    )
    return EXIT_OK


def _cmd_campaign(args: argparse.Namespace, records: list[Record], /) -> int:
    parsed = _load(args.data)
    params = _parameters(args, parsed)
    spec = CampaignSpec(
        args.kind,
        magnitudes=tuple(args.magnitudes),
        seeds=range(args.seeds),
        depth=args.depth,
        workers=args.workers,
        contained=not args.uncontained,
    )

    on_report = Hook[[int, StabilityReport], None]()

    @on_report
    def record(seed: int, report: StabilityReport) -> None:
        records.append({"command": "campaign", "seed": seed, "kind": args.kind} | report.to_dict())

    reports = run_campaign(
        parsed.dataset, params, StabilityConfig(m_bar=args.mbar, delta=args.delta), spec, on_report=on_report
    )

    print(f"runs {len(reports)}")
    print(f"hard_violations {sum(len(r.hard_violations) for r in reports)}")
    print(f"soft_violations {sum(len(r.violations) - len(r.hard_violations) for r in reports)}")
    print(f"max_sup_f1 {max(r.empirical_sup_f1 for r in reports):.6g}")
    print(f"max_sup_f2 {max(r.empirical_sup_f2 for r in reports):.6g}")

    return _exit_for(reports, args.strict)


def _build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    common.add_argument("--report", metavar="PATH", help="write a JSON-lines report to PATH")

    data = _ArgumentParser(add_help=False)
    data.add_argument(
        "--data", required=True, metavar="SOURCE", help=f"chfis-v1 file, or {SAMPLE_PREFIX}NAME"
    )

    parameters = _ArgumentParser(add_help=False)
    parameters.add_argument("--alpha", type=float, help="vertical scaling of the surface")
    parameters.add_argument("--beta", type=float, help="coupling to the hidden variable")
    parameters.add_argument("--gamma", type=float, help="vertical scaling of the hidden surface")

    workers = _ArgumentParser(add_help=False)
    workers.add_argument("--workers", type=_positive_int, default=1, help="worker threads (default: 1)")

    pair = _ArgumentParser(add_help=False)
    pair.add_argument("--base", required=True, metavar="SOURCE", help="the unperturbed dataset")
    pair.add_argument("--perturbed", required=True, metavar="SOURCE", help="the perturbed dataset")

    calibration = _ArgumentParser(add_help=False)
    calibration.add_argument("--mbar", type=float, default=1.3, help="Lipschitz prefactor (default: 1.3)")
    calibration.add_argument("--delta", type=float, default=1.0, help="Lipschitz exponent (default: 1)")
    calibration.add_argument(
        "--strict", action="store_true", help="treat soft violations (bound_xy, metric_d) as failures too"
    )

    grid_output = _ArgumentParser(add_help=False)
    grid_output.add_argument("--format", choices=GRID_FORMATS, default="csv")
    grid_output.add_argument("--out", default=STDOUT, metavar="PATH", help="output file (default: stdout)")

    parser = _ArgumentParser(
        prog="chfis",
        description="Coalescence hidden-variable fractal interpolation surfaces.",
        epilog=f"Bundled samples: {', '.join(SAMPLE_NAMES)}.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(
        name: str,
        handler: Callable[[argparse.Namespace, list[Record]], int],
        summary: str,
        *parents: argparse.ArgumentParser,
    ) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, parents=[common, *parents], help=summary, description=summary)
        sub.set_defaults(handler=handler)
        return sub

    sub = command("solve", _cmd_solve, "sample the surface on an address grid", data, parameters, workers, grid_output)
    sub.add_argument("--depth", type=int, default=6, help="address-grid depth (default: 6)")

    sub = command("eval", _cmd_eval, "approximate the surface at one point", data, parameters)
    sub.add_argument("--x", type=float, required=True)
    sub.add_argument("--y", type=float, required=True)
    sub.add_argument("--depth", type=int, help="address-expansion depth (default: 30)")

    sub = command("coeffs", _cmd_coeffs, "print the coefficients of one cell map", data, parameters)
    sub.add_argument("--cell", type=_cell, required=True, metavar="N,M", help="1-based cell")

    command("check", _cmd_check, "validate a dataset and its parameters", data, parameters)
    command("bounds", _cmd_bounds, "compute the perturbation bounds", pair, parameters, calibration)

    sub = command(
        "verify", _cmd_verify, "check measured deviations against the bounds", pair, parameters, calibration, workers
    )
    sub.add_argument("--depth", type=int, default=6, help="address-grid depth (default: 6)")

    sub = command("perturb", _cmd_perturb, "write a seeded perturbation of a dataset", data)
    sub.add_argument("--kind", choices=PERTURBATION_KINDS, required=True)
    sub.add_argument("--magnitude", type=float, required=True)
    sub.add_argument("--rng-seed", type=int, default=0)
    sub.add_argument("--out", default=STDOUT, metavar="PATH", help="output file (default: stdout)")
    sub.add_argument("--uncontained", action="store_true", help="let axis endpoints move outward too")

    sub = command("export", _cmd_export, "convert a CSV grid", grid_output)
    sub.add_argument("--grid", required=True, metavar="PATH", help="a grid written by 'solve --format csv'")

    sub = command("holder", _cmd_holder, "estimate the Lipschitz exponent of the surface", data, parameters, workers)
    sub.add_argument("--depth", type=int, default=8, help="address-grid depth (default: 8)")
    sub.add_argument("--pairs", type=int, default=2000, help="sample pairs (default: 2000)")
    sub.add_argument("--rng-seed", type=int, default=0)

    sub = command(
        "campaign", _cmd_campaign, "verify a seeded series of perturbations", data, parameters, calibration, workers
    )
    sub.add_argument("--kind", choices=PERTURBATION_KINDS, required=True)
    sub.add_argument("--magnitudes", type=float, nargs="+", default=[0.001, 0.01, 0.1])
    sub.add_argument("--seeds", type=_positive_int, default=100, help="number of seeds (default: 100)")
    sub.add_argument("--depth", type=int, default=6, help="address-grid depth (default: 6)")
    sub.add_argument("--uncontained", action="store_true", help="let axis endpoints move outward too")

    return parser


def _configure_logging(args: argparse.Namespace, /) -> None:
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True
    )


def _write_report(path: str, records: list[Record], /) -> None:
    def default(value: object) -> object:
        if isinstance(value, np.generic):
            return value.item()
        raise TypeError(f"cannot serialize {type(value).__name__}")

    lines = (json.dumps(r, sort_keys=True, default=default) + "\n" for r in records)
    Path(path).write_text("".join(lines), encoding="utf-8")


def main(argv: Sequence[str] | None = None) -> int:
    """Runs the command line and returns the exit code."""

    parser = _build_parser()

    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK

    _configure_logging(args)

    records: list[Record] = []

    try:
        code = args.handler(args, records)
    except (ChfisError, ValueError, OSError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        records.append({"command": args.command, "error": type(e).__name__, "message": str(e)})
        code = EXIT_INVALID
    except Exception as e:
        logger.exception("Internal error.")
        records.append({"command": args.command, "error": type(e).__name__, "message": str(e)})
        code = EXIT_INTERNAL

    if args.report is not None:
        try:
            _write_report(args.report, [*records, {"exit_code": code}])
        except OSError as e:
            logger.error("Cannot write the report: %s", e)
            code = code or EXIT_INVALID

    return code
