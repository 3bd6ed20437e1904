"""Atomic dynamic polarizability at imaginary frequencies"""

import io
import threading
from pathlib import Path
from typing import TextIO

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from scipy.interpolate import PchipInterpolator

from atomwall.models.constants import AU_FREQUENCY_TO_RAD_PER_S, EV_TO_RAD_PER_S
from atomwall.models.exceptions import DataFileError, DomainError, PolarizabilityRangeError, PolarizabilityTableError
from atomwall.models.interfaces import (
    OscillatorPolarizability,
    PolarizabilityModel,
    StaticPolarizability,
    TabulatedPolarizability,
)
from atomwall.utils.logging import get_logger

logger = get_logger("polarizability")

COLUMNS_HEADER = "# columns:"
# Frequency unit of the first column -> rad/s
XI_UNITS = {"xi_au": AU_FREQUENCY_TO_RAD_PER_S, "xi_eV": EV_TO_RAD_PER_S}

_interpolator_cache: LRUCache = LRUCache(maxsize=32)
_interpolator_lock = threading.Lock()


def _transform(xis: np.ndarray) -> np.ndarray:
    """Interpolation abscissa log(1 + xi) with xi in atomic units"""
    return np.log1p(np.asarray(xis, dtype=float) / AU_FREQUENCY_TO_RAD_PER_S)


@cached(_interpolator_cache, key=lambda model: hashkey(model.samples), lock=_interpolator_lock)
def _interpolator(model: TabulatedPolarizability) -> PchipInterpolator:
    xis = np.array([sample[0] for sample in model.samples])
    alphas = np.array([sample[1] for sample in model.samples])
    return PchipInterpolator(_transform(xis), np.log(alphas), extrapolate=False)


def eval_alpha_many(model: PolarizabilityModel, xis: np.ndarray | list[float]) -> np.ndarray:
    """alpha(i xi) in atomic units at every frequency (rad/s)"""
    xis = np.asarray(xis, dtype=float)
    if np.any(xis < 0):
        message = "Imaginary frequencies must be non negative"
        raise DomainError(message)
    match model:
        case OscillatorPolarizability():
            return model.alpha0 / (1.0 + (xis / model.omega0) ** 2)
        case StaticPolarizability():
            return np.full_like(xis, model.alpha0)
    if np.any(xis > model.xi_max):
        message = (
            f"Polarizability table '{model.provenance}' ends at {model.xi_max:.4e} rad/s, "
            f"requested up to {xis.max():.4e} rad/s"
        )
        raise PolarizabilityRangeError(message)
    if len(model.samples) == 1:
        return np.full_like(xis, model.alpha0)
    return np.exp(_interpolator(model)(_transform(xis)))


def eval_alpha(model: PolarizabilityModel, xi: float) -> float:
    """alpha(i xi) in atomic units

    Args:
        model (PolarizabilityModel): atom model
        xi (float): imaginary frequency in rad/s

    Returns:
        float: polarizability in a.u.
    """
    return float(eval_alpha_many(model, np.array([xi], dtype=float))[0])


def load_alpha_table(stream: TextIO, provenance: str = "") -> TabulatedPolarizability:
    """Read a polarizability CSV with header `# columns: xi_au,alpha_au` or `# columns: xi_eV,alpha_au`

    The first row must be at zero frequency, it gives the static polarizability.
    """
    unit: float | None = None
    rows: list[str] = []
    for raw in stream:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower().startswith(COLUMNS_HEADER):
                declared = [column.strip() for column in line[len(COLUMNS_HEADER) :].split(",")]
                if len(declared) != 2 or declared[0] not in XI_UNITS or declared[1] != "alpha_au":  # noqa: PLR2004
                    message = f"Unknown polarizability columns {','.join(declared)}"
                    raise PolarizabilityTableError(message)
                unit = XI_UNITS[declared[0]]
            continue
        rows.append(line)
    if unit is None:
        message = "Polarizability table does not declare its columns"
        raise PolarizabilityTableError(message)
    if not rows:
        message = "Polarizability table is empty"
        raise PolarizabilityTableError(message)
    try:
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2, dtype=float)
    except ValueError as ve:
        message = f"Malformed polarizability row: {ve}"
        raise PolarizabilityTableError(message) from ve
    if data.shape[1] != 2:  # noqa: PLR2004
        message = f"Polarizability rows need 2 values, got {data.shape[1]}"
        raise PolarizabilityTableError(message)
    xis = data[:, 0] * unit
    alphas = data[:, 1]
    logger.debug("Polarizability table %s: %s samples up to %.4e rad/s", provenance, len(xis), xis[-1])
    samples = tuple((float(xi), float(alpha)) for xi, alpha in zip(xis, alphas, strict=True))
    return TabulatedPolarizability(samples=samples, provenance=provenance)


def load_alpha_table_file(path: Path | str) -> TabulatedPolarizability:
    """Read a polarizability table from disk"""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            return load_alpha_table(stream, provenance=path.name)
    except OSError as ose:
        message = f"Cannot open polarizability table {path}: {ose.strerror}"
        logger.exception(message)
        raise DataFileError(message) from ose


def frequency_scale(model: PolarizabilityModel) -> float:
    """Frequency (rad/s) around which alpha(i xi) falls, used to map infinite frequency integrals"""
    match model:
        case OscillatorPolarizability():
            return model.omega0
        case TabulatedPolarizability() if len(model.samples) > 1:
            for xi, alpha in model.samples:
                if alpha <= 0.5 * model.alpha0:
                    return xi
            return model.xi_max
    return EV_TO_RAD_PER_S


def describe(model: PolarizabilityModel) -> str:
    """Short human label of an atom model"""
    match model:
        case OscillatorPolarizability():
            return f"oscillator({model.alpha0:g})"
        case StaticPolarizability():
            return f"static({model.alpha0:g})"
    return f"tabulated({model.provenance})"
