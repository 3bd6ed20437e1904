"""Model spec strings of the command line

Walls: `tabulated:<file>[:drude=<wp_eV>,<gamma_eV>][:eps0=<value>][:metal]`, `drude:<wp_eV>,<gamma_eV>`,
`plasma:<wp_eV>`, `static:<eps0>`, `ideal` or a catalog name.
Atoms: `tabulated:<file>`, `oscillator:<alpha0_au>,<omega0_eV>`, `static:<alpha0_au>` or a catalog name.
"""

import math
from pathlib import Path

from pydantic import ValidationError

from atomwall.models.exceptions import DataFileError, UsageError
from atomwall.models.interfaces import (
    DielectricModel,
    DrudeDielectric,
    IdealMetal,
    LowFreqExtension,
    OscillatorPolarizability,
    PlasmaDielectric,
    PolarizabilityModel,
    StaticDielectric,
    StaticPolarizability,
    TabulatedKKDielectric,
)
from atomwall.services import presets
from atomwall.services.optics import load_optical_table_file
from atomwall.services.physconst import ev_to_angular
from atomwall.services.polarizability import load_alpha_table_file
from atomwall.utils.logging import get_logger

logger = get_logger("specs")


def _number(token: str, spec: str) -> float:
    try:
        value = float(token)
    except ValueError:
        message = f"Malformed number '{token}' in '{spec}'"
        raise UsageError(message) from None
    if not math.isfinite(value):
        message = f"Number '{token}' in '{spec}' is not finite"
        raise UsageError(message)
    return value


def _numbers(token: str, spec: str, count: int) -> list[float]:
    parts = token.split(",")
    if len(parts) != count:
        message = f"Expected {count} comma separated values, got '{token}' in '{spec}'"
        raise UsageError(message)
    return [_number(part, spec) for part in parts]


def _resolve(file_name: str, data_dir: Path | None) -> Path:
    """File as given, or inside the data directory"""
    path = Path(file_name)
    if not path.is_absolute() and not path.exists() and data_dir is not None and (data_dir / path).exists():
        return data_dir / path
    if not path.exists():
        message = f"Data file {file_name} not found"
        raise DataFileError(message)
    return path


def _tabulated_wall(arguments: list[str], spec: str, data_dir: Path | None) -> TabulatedKKDielectric:
    if not arguments or not arguments[0]:
        message = f"Missing file name in '{spec}'"
        raise UsageError(message)
    extension = LowFreqExtension()
    options: dict = {}
    for option in arguments[1:]:
        name, _, value = option.partition("=")
        match name:
            case "drude":
                omega_p, gamma = _numbers(value, spec, 2)
                extension = LowFreqExtension(kind="drude", omega_p=ev_to_angular(omega_p), gamma=ev_to_angular(gamma))
            case "eps0":
                options["eps0"] = _number(value, spec)
            case "metal" if not value:
                options["metallic"] = True
            case _:
                message = f"Unknown option '{option}' in '{spec}'"
                raise UsageError(message)
    table = load_optical_table_file(_resolve(arguments[0], data_dir))
    return TabulatedKKDielectric(table=table, extension=extension, **options)


def parse_wall(spec: str, data_dir: Path | None = None) -> DielectricModel:
    """Build the dielectric model described by a wall spec

    Args:
        spec (str): spec string
        data_dir (Path | None): directory searched for data files and catalog entries

    Returns:
        DielectricModel: the wall model
    """
    kind, _, rest = spec.strip().partition(":")
    try:
        match kind:
            case "tabulated":
                return _tabulated_wall(rest.split(":"), spec, data_dir)
            case "drude":
                omega_p, gamma = _numbers(rest, spec, 2)
                return DrudeDielectric(omega_p=ev_to_angular(omega_p), gamma=ev_to_angular(gamma))
            case "plasma":
                return PlasmaDielectric(omega_p=ev_to_angular(_number(rest, spec)))
            case "static":
                return StaticDielectric(eps0=_number(rest, spec))
            case "ideal" if not rest:
                return IdealMetal()
            case _ if not rest and kind in presets.WALLS:
                return presets.wall_preset(kind, data_dir)
    except ValidationError as ve:
        message = f"Invalid wall '{spec}': {ve.errors()[0]['msg']}"
        raise UsageError(message) from ve
    message = f"Unknown wall spec '{spec}'"
    raise UsageError(message)


def parse_atom(spec: str, data_dir: Path | None = None) -> PolarizabilityModel:
    """Build the polarizability model described by an atom spec"""
    kind, _, rest = spec.strip().partition(":")
    try:
        match kind:
            case "tabulated" if rest:
                return load_alpha_table_file(_resolve(rest, data_dir))
            case "oscillator":
                alpha0, omega0 = _numbers(rest, spec, 2)
                return OscillatorPolarizability(alpha0=alpha0, omega0=ev_to_angular(omega0))
            case "static":
                return StaticPolarizability(alpha0=_number(rest, spec))
            case _ if not rest and kind in presets.ATOMS:
                return presets.atom_preset(kind, data_dir)
    except ValidationError as ve:
        message = f"Invalid atom '{spec}': {ve.errors()[0]['msg']}"
        raise UsageError(message) from ve
    message = f"Unknown atom spec '{spec}'"
    raise UsageError(message)
