"""Catalog of the walls and atoms studied, and the column sets of the comparison tables"""

from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

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
from atomwall.services.optics import load_optical_table_file
from atomwall.services.physconst import ev_to_angular
from atomwall.services.polarizability import load_alpha_table_file
from atomwall.utils.logging import get_logger

logger = get_logger("presets")

AU_PLASMA_FREQUENCY = 1.37e16  # rad/s
AU_RELAXATION_EV = 0.035
SI_STATIC_PERMITTIVITY = 11.66
SIO2_STATIC_PERMITTIVITY = 4.88
# SiO2 permittivity in the visible range
SIO2_VISIBLE_PERMITTIVITY = 2.13
HE_STAR_ALPHA0 = 315.63  # a.u.
HE_STAR_OMEGA0_EV = 1.18
NA_ALPHA0 = 162.68  # a.u.
NA_OMEGA0_EV = 1.55

# Data files looked up in the data directory
DATA_FILES = {
    "au": "au.csv",
    "si": "si.csv",
    "sio2": "sio2.csv",
    "he_star-accurate": "he_star_alpha.csv",
    "na-accurate": "na_alpha.csv",
}

SEPARATIONS_NM = [3, 5, 10, 15, 20, 25, 50, 75, 100, 125, 150]


def data_file(name: str, data_dir: Path | str | None) -> Path:
    """Location of the data file behind a catalog entry"""
    if data_dir is None:
        message = f"'{name}' needs {DATA_FILES[name]} but no data directory is configured"
        raise DataFileError(message)
    path = Path(data_dir) / DATA_FILES[name]
    if not path.is_file():
        message = f"'{name}' needs {path}, which does not exist"
        raise DataFileError(message)
    return path


def au_drude_extension() -> LowFreqExtension:
    return LowFreqExtension(kind="drude", omega_p=AU_PLASMA_FREQUENCY, gamma=ev_to_angular(AU_RELAXATION_EV))


def _tabulated(name: str, **options: object) -> Callable[[Path | str | None], DielectricModel]:
    def build(data_dir: Path | str | None) -> DielectricModel:
        return TabulatedKKDielectric(table=load_optical_table_file(data_file(name, data_dir)), **options)

    return build


def _accurate(name: str) -> Callable[[Path | str | None], PolarizabilityModel]:
    def build(data_dir: Path | str | None) -> PolarizabilityModel:
        return load_alpha_table_file(data_file(name, data_dir))

    return build


WALLS: dict[str, Callable[[Path | str | None], DielectricModel]] = {
    "au": _tabulated("au", extension=au_drude_extension(), metallic=True),
    "au-plasma": lambda _: PlasmaDielectric(omega_p=AU_PLASMA_FREQUENCY),
    "au-drude": lambda _: DrudeDielectric(omega_p=AU_PLASMA_FREQUENCY, gamma=ev_to_angular(AU_RELAXATION_EV)),
    "si": _tabulated("si", eps0=SI_STATIC_PERMITTIVITY),
    "si-static": lambda _: StaticDielectric(eps0=SI_STATIC_PERMITTIVITY),
    "sio2": _tabulated("sio2", eps0=SIO2_STATIC_PERMITTIVITY),
    "sio2-static": lambda _: StaticDielectric(eps0=SIO2_STATIC_PERMITTIVITY),
    "sio2-visible": lambda _: StaticDielectric(eps0=SIO2_VISIBLE_PERMITTIVITY),
    "ideal": lambda _: IdealMetal(),
}

ATOMS: dict[str, Callable[[Path | str | None], PolarizabilityModel]] = {
    "he_star": lambda _: OscillatorPolarizability(alpha0=HE_STAR_ALPHA0, omega0=ev_to_angular(HE_STAR_OMEGA0_EV)),
    "he_star-accurate": _accurate("he_star-accurate"),
    "he_star-static": lambda _: StaticPolarizability(alpha0=HE_STAR_ALPHA0),
    "na": lambda _: OscillatorPolarizability(alpha0=NA_ALPHA0, omega0=ev_to_angular(NA_OMEGA0_EV)),
    "na-accurate": _accurate("na-accurate"),
    "na-static": lambda _: StaticPolarizability(alpha0=NA_ALPHA0),
}


@dataclass(frozen=True)
class PresetColumn:
    """One column of a comparison table: a wall and an atom from the catalog"""

    label: str
    wall: str
    atom: str


def _columns(atom_label: str, atom: str, pairs: list[tuple[str, str, str]]) -> list[PresetColumn]:
    return [
        PresetColumn(label=f"{atom_label} ({letter})", wall=wall, atom=f"{atom}{suffix}")
        for letter, wall, suffix in pairs
    ]


def _metal_columns(atom_label: str, atom: str) -> list[PresetColumn]:
    pairs = [("a", "ideal", "-accurate"), ("b", "au", "-accurate"), ("c", "au", ""), ("d", "au-plasma", "-accurate")]
    return _columns(atom_label, atom, pairs)


def _insulator_columns(atom_label: str, atom: str, wall: str) -> list[PresetColumn]:
    pairs = [("a", f"{wall}-static", "-accurate"), ("b", wall, "-accurate"), ("c", wall, "")]
    return _columns(atom_label, atom, pairs)


TABLES: dict[str, list[PresetColumn]] = {
    "table1": _metal_columns("He*", "he_star") + _metal_columns("Na", "na"),
    "table2": _insulator_columns("He*", "he_star", "si") + _insulator_columns("Na", "na", "si"),
    "table3": _insulator_columns("He*", "he_star", "sio2") + _insulator_columns("Na", "na", "sio2"),
}


def wall_preset(name: str, data_dir: Path | str | None = None) -> DielectricModel:
    """Wall model of a catalog entry"""
    if name not in WALLS:
        message = f"Unknown wall '{name}', catalog walls are {', '.join(sorted(WALLS))}"
        raise UsageError(message)
    return WALLS[name](data_dir)


def atom_preset(name: str, data_dir: Path | str | None = None) -> PolarizabilityModel:
    """Atom model of a catalog entry"""
    if name not in ATOMS:
        message = f"Unknown atom '{name}', catalog atoms are {', '.join(sorted(ATOMS))}"
        raise UsageError(message)
    return ATOMS[name](data_dir)


def table_columns(table: str) -> list[PresetColumn]:
    """Column definitions of a comparison table"""
    if table not in TABLES:
        message = f"Unknown table '{table}', choose one of {', '.join(TABLES)}"
        raise UsageError(message)
    return TABLES[table]


def build_table_columns(
    table: str,
    data_dir: Path | str | None,
) -> list[tuple[PresetColumn, DielectricModel, PolarizabilityModel]]:
    """Resolve the models of every column of a comparison table

    Args:
        table (str): table1, table2 or table3
        data_dir (Path | str | None): directory holding the optical and polarizability files

    Returns:
        list[tuple[PresetColumn, DielectricModel, PolarizabilityModel]]: columns with their models
    """
    columns = []
    for column in table_columns(table):
        columns.append((column, wall_preset(column.wall, data_dir), atom_preset(column.atom, data_dir)))
    logger.debug("Table %s resolved with %s columns", table, len(columns))
    return columns
