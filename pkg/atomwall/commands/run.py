"""Command line runs: configuration and emitted artifacts"""

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TextIO

from pydantic import ValidationError

from atomwall.commands.specs import parse_atom, parse_wall
from atomwall.models.constants import (
    CSV_SIGNIFICANT_DIGITS,
    DEFAULT_TEMPERATURE_K,
    EXIT_OK,
    TABLE_SIGNIFICANT_DIGITS,
)
from atomwall.models.exceptions import AtomwallError, DataFileError, UsageError
from atomwall.models.interfaces import (
    DielectricModel,
    GeometrySpec,
    MatsubaraSpec,
    PolarizabilityModel,
    RunConfig,
    SeparationRange,
    VdwPoint,
)
from atomwall.services import presets
from atomwall.services.cache import get_eps_cache
from atomwall.services.lifshitz import MatsubaraGrid, compute_c3, compute_c3_integral, compute_c3_nonrel, sweep
from atomwall.services.physconst import m_to_nm, nm_to_m
from atomwall.utils.config import get_settings, read_config
from atomwall.utils.logging import current_run, get_logger

logger = get_logger("run")

NM_SUFFIX = "nm"
CSV_HEADER = ["a_nm", "C3_au", "F_J", "l_used"]


class _ArgumentParser(argparse.ArgumentParser):
    """Parser reporting errors as UsageError instead of exiting"""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="atomwall", description="van der Waals coefficient C3(a, T) of an atom near a wall")
    parser.add_argument("--config", type=Path, help="YAML file with default values of the options")
    parser.add_argument("--wall", action="append", help="wall spec, repeatable")
    parser.add_argument("--atom", action="append", help="atom spec, repeatable")
    parser.add_argument("--T", dest="temperature_K", type=float, help="temperature in K (default 300)")
    parser.add_argument("--a", dest="separations", action="append", help="separation such as 3nm, repeatable")
    parser.add_argument("--range", nargs=3, metavar=("MIN", "MAX", "COUNT"), help="separations from MIN to MAX")
    parser.add_argument("--scale", choices=["linear", "log"], help="spacing of --range (default linear)")
    parser.add_argument("--preset", choices=sorted(presets.TABLES), help="columns of a comparison table")
    parser.add_argument("--data-dir", dest="data_dir", type=Path, help="directory of the data files")
    parser.add_argument("--output", choices=["csv", "table"], help="output layout (default csv)")
    parser.add_argument("--emit", choices=["c3", "eps", "nonrel"], help="computed product (default c3)")
    parser.add_argument("--cache-dir", dest="cache_dir", type=Path, help="directory of the eps cache")
    parser.add_argument("--out", type=Path, help="output file instead of stdout")
    parser.add_argument("--workers", type=int, help="threads evaluating Matsubara blocks")
    return parser


def parse_separation(token: Any) -> float:  # noqa: ANN401
    """'3nm' -> 3e-9 m, other units are refused"""
    text = str(token).strip()
    if not text.endswith(NM_SUFFIX):
        message = f"Separation '{text}' must be given in nm, e.g. 3nm"
        raise UsageError(message)
    try:
        value = float(text[: -len(NM_SUFFIX)])
    except ValueError:
        message = f"Malformed separation '{text}'"
        raise UsageError(message) from None
    if not math.isfinite(value):
        message = f"Separation '{text}' is not finite"
        raise UsageError(message)
    return nm_to_m(value)


def _range_separations(value: Any, scale: str | None) -> list[float]:  # noqa: ANN401
    """Separations of a CLI triple or of a YAML mapping {min, max, count, scale}"""
    if isinstance(value, dict):
        low, high, count = value.get("min"), value.get("max"), value.get("count")
        scale = scale or value.get("scale")
    elif isinstance(value, list | tuple) and len(value) == 3:  # noqa: PLR2004
        low, high, count = value
    else:
        message = f"Malformed separation range {value!r}"
        raise UsageError(message)
    try:
        separation_range = SeparationRange(
            min=parse_separation(low),
            max=parse_separation(high),
            count=int(count),
            scale=scale or "linear",
        )
    except (TypeError, ValueError) as error:
        message = f"Invalid separation range {value!r}: {error}"
        raise UsageError(message) from error
    return separation_range.values()


def _as_list(value: Any) -> list[str]:  # noqa: ANN401
    if value is None:
        return []
    if isinstance(value, list | tuple):
        return [str(item) for item in value]
    return [str(value)]


def parse_config(argv: list[str] | None = None, config_file: Path | str | None = None) -> RunConfig:
    """Merge the YAML configuration and the command line, the command line winning

    Args:
        argv (list[str] | None): command line arguments, sys.argv when None
        config_file (Path | str | None): YAML file used when --config is absent

    Returns:
        RunConfig: validated configuration
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()
    file_values = read_config(args.config or config_file or settings.app_config_file)
    cli_values = {key: value for key, value in vars(args).items() if value is not None and key != "config"}

    def pick(key: str, default: Any = None) -> Any:  # noqa: ANN401
        if key in cli_values:
            return cli_values[key]
        return file_values.get(key, default)

    walls = _as_list(pick("wall"))
    atoms = _as_list(pick("atom"))
    labels = None
    preset = pick("preset")
    if preset is not None:
        if walls or atoms:
            message = "--preset cannot be combined with --wall or --atom"
            raise UsageError(message)
        columns = presets.table_columns(preset)
        walls = [column.wall for column in columns]
        atoms = [column.atom for column in columns]
        labels = [column.label for column in columns]
    if not walls or not atoms:
        message = "Give at least one --wall and one --atom (or a --preset)"
        raise UsageError(message)

    if "separations" in cli_values or "range" in cli_values:
        explicit = cli_values.get("separations", [])
        spread = cli_values.get("range")
    else:
        explicit = file_values.get("separations", [])
        spread = file_values.get("range")
    separations = [parse_separation(token) for item in _as_list(explicit) for token in item.split(",") if token]
    if spread is not None:
        separations += _range_separations(spread, pick("scale"))
    if not separations and preset is not None:
        separations = [nm_to_m(value) for value in presets.SEPARATIONS_NM]
    if not separations:
        message = "No separation given, use --a or --range"
        raise UsageError(message)

    data_dir = pick("data_dir", settings.data_dir)
    cache_dir = pick("cache_dir")
    out = pick("out")
    try:
        return RunConfig(
            walls=walls,
            atoms=atoms,
            labels=labels,
            temperature_K=pick("temperature_K", DEFAULT_TEMPERATURE_K),
            separations=sorted(set(separations)),
            output=pick("output", "csv"),
            emit=pick("emit", "c3"),
            cache_dir=Path(cache_dir) if cache_dir is not None else None,
            out=Path(out) if out is not None else None,
            workers=pick("workers", settings.workers),
            data_dir=Path(data_dir) if data_dir is not None else None,
        )
    except ValidationError as ve:
        error = ve.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        message = f"Invalid configuration {location}: {error['msg']}"
        raise UsageError(message) from ve


def _sig(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _csv_line(values: list[str]) -> str:
    return ",".join(values) + "\n"


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(row[index]) for row in rows) for index in range(len(rows[0]))]
    return "".join("  ".join(cell.rjust(width) for cell, width in zip(row, widths, strict=True)) + "\n" for row in rows)


@dataclass(frozen=True)
class _Combination:
    """Wall and atom of one output column"""

    label: str
    wall_spec: str
    atom_spec: str
    wall: DielectricModel
    atom: PolarizabilityModel


def _combinations(config: RunConfig) -> list[_Combination]:
    walls: dict[str, DielectricModel] = {}
    atoms: dict[str, PolarizabilityModel] = {}
    combinations = []
    for index, (wall_spec, atom_spec) in enumerate(config.combinations):
        if wall_spec not in walls:
            walls[wall_spec] = parse_wall(wall_spec, config.data_dir)
        if atom_spec not in atoms:
            atoms[atom_spec] = parse_atom(atom_spec, config.data_dir)
        label = config.labels[index] if config.labels else f"{wall_spec} / {atom_spec}"
        combinations.append(_Combination(label, wall_spec, atom_spec, walls[wall_spec], atoms[atom_spec]))
    return combinations


def _emit_c3(config: RunConfig, combinations: list[_Combination]) -> str:
    matsubara = MatsubaraSpec(T=config.temperature_K)
    cache = get_eps_cache(config.cache_dir)
    grids: dict[tuple[str, str], MatsubaraGrid] = {}
    columns: list[list[VdwPoint]] = []
    for combination in combinations:
        key = (combination.wall_spec, combination.atom_spec)
        if key not in grids:
            grids[key] = MatsubaraGrid(config.temperature_K, combination.wall, combination.atom, cache)
        logger.info("Computing %s at %s separations", combination.label, len(config.separations))
        columns.append(
            sweep(
                config.separations,
                matsubara,
                combination.wall,
                combination.atom,
                workers=config.workers,
                grid=grids[key],
            )
        )
    if cache is not None:
        logger.debug("eps cache: %s hits, %s misses", cache.hits, cache.misses)

    if config.output == "table":
        rows = [["a (nm)", *[combination.label for combination in combinations]]]
        for index, separation in enumerate(config.separations):
            row = [_sig(m_to_nm(separation), CSV_SIGNIFICANT_DIGITS)]
            row += [_sig(column[index].C3.value_au, TABLE_SIGNIFICANT_DIGITS) for column in columns]
            rows.append(row)
        return _aligned(rows)

    several = len(combinations) > 1
    lines = [_csv_line((["wall", "atom"] if several else []) + CSV_HEADER)]
    for combination, column in zip(combinations, columns, strict=True):
        for point in column:
            values = [
                _sig(point.a_nm, CSV_SIGNIFICANT_DIGITS),
                _sig(point.C3.value_au, CSV_SIGNIFICANT_DIGITS),
                _sig(point.F, CSV_SIGNIFICANT_DIGITS),
                str(point.diagnostics.l_used),
            ]
            lines.append(_csv_line(([combination.wall_spec, combination.atom_spec] if several else []) + values))
    return "".join(lines)


def _emit_eps(config: RunConfig, combinations: list[_Combination]) -> str:
    """eps(i xi_l) of every wall for the Matsubara frequencies used at the smallest separation"""
    matsubara = MatsubaraSpec(T=config.temperature_K)
    cache = get_eps_cache(config.cache_dir)
    walls: dict[str, _Combination] = {}
    for combination in combinations:
        walls.setdefault(combination.wall_spec, combination)
    several = len(walls) > 1
    rows = [(["wall"] if several else []) + ["log10_xi", "eps"]]
    for wall_spec, combination in walls.items():
        grid = MatsubaraGrid(config.temperature_K, combination.wall, combination.atom, cache)
        point = compute_c3(GeometrySpec(a=config.separations[0]), matsubara, combination.wall, combination.atom, grid)
        xis, eps = grid.values(point.diagnostics.l_used)
        for xi, value in zip(xis.tolist(), eps.tolist(), strict=True):
            rows.append(
                ([wall_spec] if several else [])
                + [_sig(math.log10(xi), CSV_SIGNIFICANT_DIGITS), _sig(value, CSV_SIGNIFICANT_DIGITS)]
            )
    if config.output == "table":
        return _aligned(rows)
    return "".join(_csv_line(row) for row in rows)


def _emit_nonrel(config: RunConfig, combinations: list[_Combination]) -> str:
    """Short separation limit as a Matsubara sum and as a frequency integral"""
    rows = [["wall", "atom", "C3_nonrel_au", "C3_integral_au"]]
    for combination in combinations:
        nonrel = compute_c3_nonrel(config.temperature_K, combination.wall, combination.atom)
        integral = compute_c3_integral(combination.wall, combination.atom)
        digits = TABLE_SIGNIFICANT_DIGITS if config.output == "table" else CSV_SIGNIFICANT_DIGITS
        values = [_sig(nonrel.value_au, digits), _sig(integral.value_au, digits)]
        rows.append([combination.wall_spec, combination.atom_spec, *values])
    if config.output == "table":
        return _aligned(rows)
    return "".join(_csv_line(row) for row in rows)


EMITTERS = {"c3": _emit_c3, "eps": _emit_eps, "nonrel": _emit_nonrel}


def _write(config: RunConfig, content: str, stream: TextIO) -> None:
    if config.out is None:
        stream.write(content)
        return
    try:
        with config.out.open("w", encoding="utf-8", newline="") as handle:
            handle.write(content)
    except OSError as ose:
        message = f"Cannot write {config.out}: {ose.strerror}"
        logger.exception(message)
        raise DataFileError(message) from ose
    logger.info("Results written to %s", config.out)


def run(config: RunConfig, stream: TextIO | None = None, errors: TextIO | None = None) -> int:
    """Compute and emit the requested product

    Args:
        config (RunConfig): validated configuration
        stream (TextIO | None): destination when no output file is configured, stdout by default
        errors (TextIO | None): destination of the one line error report, stderr by default

    Returns:
        int: process exit code
    """
    stream = stream or sys.stdout
    errors = errors or sys.stderr
    token = current_run.set(hashlib.sha256(config.model_dump_json().encode("utf-8")).hexdigest()[:8])
    try:
        content = EMITTERS[config.emit](config, _combinations(config))
        _write(config, content, stream)
    except AtomwallError as ae:
        logger.debug("Run failed with code %s", ae.code, exc_info=True)
        errors.write(f"atomwall: error: {ae}\n")
        return ae.exit_code
    finally:
        current_run.reset(token)
    return EXIT_OK
