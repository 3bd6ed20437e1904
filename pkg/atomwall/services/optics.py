"""Optical data, dispersion relation and dielectric models of the wall"""

import io
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from atomwall.models.constants import (
    IDEAL_EPSILON,
    KK_GAUSS_ORDER,
    KK_MAX_BISECTIONS,
    KK_RTOL,
    KK_XI_CHUNK,
)
from atomwall.models.exceptions import (
    DataFileError,
    DomainError,
    OpticalTableParseError,
    OpticalTableValidationError,
    QuadratureConvergenceError,
)
from atomwall.models.interfaces import (
    DielectricModel,
    DrudeDielectric,
    EpsGrid,
    IdealMetal,
    LowFreqExtension,
    OpticalTable,
    PlasmaDielectric,
    StaticDielectric,
    StaticRatio,
    TabulatedKKDielectric,
)
from atomwall.services.physconst import ev_to_angular
from atomwall.utils.logging import get_logger

logger = get_logger("optics")

COLUMNS_NK = ("energy_eV", "n", "k")
COLUMNS_IM_EPS = ("energy_eV", "im_eps")
COLUMNS_HEADER = "# columns:"

# Below this relative distance between xi and gamma the Drude closed form switches to its midpoint limit
_DRUDE_DEGENERACY = 1e-5

_eps_cache: LRUCache = LRUCache(maxsize=1 << 16)
_eps_cache_lock = threading.Lock()
_prep_cache: LRUCache = LRUCache(maxsize=64)
_prep_cache_lock = threading.Lock()


def im_eps_from_nk(n: float, k: float) -> float:
    """Imaginary part of the permittivity from the complex refractive index, 2nk"""
    if n < 0 or k < 0:
        message = f"Refractive index parts must be non negative, got n={n}, k={k}"
        raise DomainError(message)
    return 2.0 * n * k


def _parse_columns(line: str) -> tuple[str, ...]:
    declared = tuple(column.strip() for column in line[len(COLUMNS_HEADER) :].split(","))
    if declared not in (COLUMNS_NK, COLUMNS_IM_EPS):
        message = f"Unknown optical columns {','.join(declared)}, expected energy_eV,n,k or energy_eV,im_eps"
        raise OpticalTableParseError(message)
    return declared


def load_optical_table(stream: TextIO, column_format: str | None = None, provenance: str = "") -> OpticalTable:
    """Read an optical constants CSV into an OpticalTable in rad/s

    The header line `# columns: energy_eV,n,k` or `# columns: energy_eV,im_eps`
    declares the layout unless column_format ("nk" or "im_eps") is given.
    Energies must be non decreasing; on duplicates the later row wins.

    Args:
        stream (TextIO): text stream of the file
        column_format (str | None): layout override
        provenance (str): label of the data source

    Returns:
        OpticalTable: validated table
    """
    columns: tuple[str, ...] | None = {"nk": COLUMNS_NK, "im_eps": COLUMNS_IM_EPS}.get(column_format or "")
    if column_format is not None and columns is None:
        message = f"Unknown optical table format {column_format}"
        raise OpticalTableParseError(message)
    rows: list[str] = []
    for raw in stream:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower().startswith(COLUMNS_HEADER) and column_format is None:
                columns = _parse_columns(line)
            continue
        rows.append(line)
    if columns is None:
        message = "Optical table does not declare its columns"
        raise OpticalTableParseError(message)
    if not rows:
        message = "Optical table is empty"
        raise OpticalTableValidationError(message)
    try:
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2, dtype=float)
    except ValueError as ve:
        message = f"Malformed optical table row: {ve}"
        raise OpticalTableParseError(message) from ve
    if data.shape[1] != len(columns):
        message = f"Optical table rows have {data.shape[1]} values, header declares {len(columns)}"
        raise OpticalTableParseError(message)
    energies = data[:, 0]
    if np.any(np.diff(energies) < 0):
        message = "Optical table energies are not monotone"
        raise OpticalTableParseError(message)
    if np.any(data[:, 1:] < 0):
        message = "Optical table contains negative n, k or Im eps"
        raise OpticalTableValidationError(message)
    if columns == COLUMNS_NK:
        im_eps = [im_eps_from_nk(float(n), float(k)) for n, k in data[:, 1:3]]
    else:
        im_eps = [float(value) for value in data[:, 1]]
    by_energy: dict[float, float] = {}
    for energy, value in zip(energies, im_eps, strict=True):
        by_energy[float(energy)] = value
    samples = tuple((ev_to_angular(energy), value) for energy, value in by_energy.items())
    dropped = len(rows) - len(samples)
    logger.debug("Optical table %s: %s samples, %s duplicates dropped", provenance, len(samples), dropped)
    return OpticalTable(samples=samples, provenance=provenance)


def load_optical_table_file(path: Path | str, column_format: str | None = None) -> OpticalTable:
    """Read an optical table from disk, the file name being the provenance"""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            return load_optical_table(stream, column_format, provenance=path.name)
    except OSError as ose:
        message = f"Cannot open optical table {path}: {ose.strerror}"
        logger.exception(message)
        raise DataFileError(message) from ose


def drude_im_eps(omega: float | np.ndarray, omega_p: float, gamma: float) -> float | np.ndarray:
    """Imaginary part of the Drude permittivity, wp^2 gamma / (w (w^2 + gamma^2))"""
    if np.any(np.asarray(omega) <= 0):
        message = "Drude Im eps diverges at zero frequency"
        raise DomainError(message)
    return omega_p**2 * gamma / (omega * (omega**2 + gamma**2))


def _drude_extension_integral(xis: np.ndarray, omega_m: float, omega_p: float, gamma: float) -> np.ndarray:
    """Closed form of the dispersion integral of the Drude Im eps over (0, omega_m)"""

    def f(x: np.ndarray) -> np.ndarray:
        return np.arctan(omega_m / x) / x

    def f_prime(x: np.ndarray) -> np.ndarray:
        return -omega_m / (x * (x**2 + omega_m**2)) - np.arctan(omega_m / x) / x**2

    xis = np.asarray(xis, dtype=float)
    result = np.empty_like(xis)
    near = np.abs(xis - gamma) < _DRUDE_DEGENERACY * gamma
    far = ~near
    result[far] = (f(gamma) - f(xis[far])) / (xis[far] ** 2 - gamma**2)
    result[near] = -f_prime(0.5 * (xis[near] + gamma)) / (xis[near] + gamma)
    return omega_p**2 * gamma * result


@dataclass(frozen=True)
class _TablePrep:
    """Per segment interpolation coefficients of a table"""

    log_omega: np.ndarray
    omega: np.ndarray
    im_eps: np.ndarray
    loglog: np.ndarray
    log_im_eps: np.ndarray
    slope: np.ndarray


def _prepare(table: OpticalTable) -> _TablePrep:
    with _prep_cache_lock:
        prep = _prep_cache.get(table.content_hash)
    if prep is not None:
        return prep
    omega = table.omega
    im_eps = table.im_eps
    log_omega = np.log(omega)
    loglog = (im_eps[:-1] > 0) & (im_eps[1:] > 0)
    safe = np.where(im_eps > 0, im_eps, 1.0)
    log_im_eps = np.log(safe)
    slope = np.where(loglog, np.diff(log_im_eps) / np.diff(log_omega), 0.0)
    prep = _TablePrep(log_omega, omega, im_eps, loglog, log_im_eps, slope)
    with _prep_cache_lock:
        _prep_cache[table.content_hash] = prep
    return prep


def _interpolate(prep: _TablePrep, seg: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Im eps at log frequencies u lying in segments seg (log-log, linear when an endpoint is zero)"""
    seg = seg[:, None]
    power_law = np.exp(prep.log_im_eps[seg] + prep.slope[seg] * (u - prep.log_omega[seg]))
    omega = np.exp(u)
    w0 = prep.omega[seg]
    w1 = prep.omega[seg + 1]
    linear = prep.im_eps[seg] + (prep.im_eps[seg + 1] - prep.im_eps[seg]) * (omega - w0) / (w1 - w0)
    return np.where(prep.loglog[seg], power_law, linear)


def _gauss(
    prep: _TablePrep, lo: np.ndarray, hi: np.ndarray, seg: np.ndarray, xis: np.ndarray, order: int
) -> np.ndarray:
    """Gauss-Legendre estimate over [lo, hi] in log frequency, shape (xi, interval)"""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    u = 0.5 * (hi + lo)[:, None] + half[:, None] * nodes[None, :]
    values = _interpolate(prep, seg, u)
    ratio = xis[:, None, None] / np.exp(u)[None, :, :]
    integrand = values[None, :, :] / (1.0 + ratio**2)
    return (integrand @ weights) * half[None, :]


def _adaptive(
    prep: _TablePrep,
    lo: np.ndarray,
    hi: np.ndarray,
    seg: np.ndarray,
    xis: np.ndarray,
    floor: np.ndarray,
    order: int,
    depth: int,
) -> np.ndarray:
    """Per interval adaptive refinement, each xi following its own acceptance decisions"""
    coarse = _gauss(prep, lo, hi, seg, xis, order)
    fine = _gauss(prep, lo, hi, seg, xis, 2 * order)
    tolerance = KK_RTOL * np.abs(fine) + floor[:, None] * (hi - lo)[None, :]
    failed = np.abs(fine - coarse) > tolerance
    if not failed.any():
        return fine
    if depth >= KK_MAX_BISECTIONS:
        message = f"Dispersion integral did not converge after {depth} bisections"
        raise QuadratureConvergenceError(message)
    cols = np.nonzero(failed.any(axis=0))[0]
    mid = 0.5 * (lo[cols] + hi[cols])
    left = _adaptive(prep, lo[cols], mid, seg[cols], xis, floor, order, depth + 1)
    right = _adaptive(prep, mid, hi[cols], seg[cols], xis, floor, order, depth + 1)
    refined = fine.copy()
    refined[:, cols] = np.where(failed[:, cols], left + right, fine[:, cols])
    return refined


def _table_integral(table: OpticalTable, xis: np.ndarray, order: int) -> np.ndarray:
    """Integral of w Im eps / (w^2 + xi^2) over the tabulated range"""
    prep = _prepare(table)
    if len(prep.omega) < 2:  # noqa: PLR2004
        return np.zeros_like(xis)
    lo = prep.log_omega[:-1]
    hi = prep.log_omega[1:]
    seg = np.arange(len(lo))
    span = hi[-1] - lo[0]
    results = []
    for start in range(0, len(xis), KK_XI_CHUNK):
        chunk = xis[start : start + KK_XI_CHUNK]
        rough = _gauss(prep, lo, hi, seg, chunk, order).sum(axis=1)
        floor = KK_RTOL * np.abs(rough) / span
        results.append(_adaptive(prep, lo, hi, seg, chunk, floor, order, 0).sum(axis=1))
    return np.concatenate(results) if results else np.zeros(0)


def _kk_many(table: OpticalTable, ext: LowFreqExtension, xis: np.ndarray, order: int = KK_GAUSS_ORDER) -> np.ndarray:
    """Dispersion relation at xi >= 0; the Drude extension needs xi > 0"""
    integral = _table_integral(table, xis, order)
    if ext.kind == "drude":
        integral = integral + _drude_extension_integral(xis, table.source_range[0], ext.omega_p, ext.gamma)
    return 1.0 + 2.0 / math.pi * integral


def kk_eps_imag_axis(
    table: OpticalTable,
    ext: LowFreqExtension,
    xi: float,
    order: int = KK_GAUSS_ORDER,
) -> float:
    """eps(i xi) from tabulated Im eps through the dispersion relation

    Im eps is the Drude extension below the first sample (when requested),
    the log-log interpolated table inside its range, and zero above it.

    Args:
        table (OpticalTable): tabulated absorption
        ext (LowFreqExtension): low frequency extension
        xi (float): imaginary frequency in rad/s, positive
        order (int): Gauss-Legendre order of the coarse estimate

    Returns:
        float: eps(i xi)
    """
    if not xi > 0:
        message = f"Dispersion relation needs xi > 0, got {xi}"
        raise DomainError(message)
    return float(_kk_many(table, ext, np.array([xi], dtype=float), order)[0])


def kk_eps_imag_axis_many(
    table: OpticalTable,
    ext: LowFreqExtension,
    xis: np.ndarray | list[float],
    order: int = KK_GAUSS_ORDER,
) -> np.ndarray:
    """Vectorized kk_eps_imag_axis"""
    xis = np.asarray(xis, dtype=float)
    if np.any(xis <= 0):
        message = "Dispersion relation needs xi > 0"
        raise DomainError(message)
    return _kk_many(table, ext, xis, order)


def kk_tail_bound(model: DielectricModel, xi: float) -> float:
    """Relative bound of the dispersion integral dropped above the table, Im eps ~ w^-3 assumed

    Zero for the analytic models, which have no truncated data.
    """
    if not isinstance(model, TabulatedKKDielectric):
        return 0.0
    absolute = 2.0 / (3.0 * math.pi) * float(model.table.im_eps[-1])
    return absolute / eval_dielectric(model, xi)


def is_metallic(model: DielectricModel) -> bool:
    """Whether eps(i xi) diverges at zero frequency"""
    match model:
        case IdealMetal() | DrudeDielectric() | PlasmaDielectric():
            return True
        case TabulatedKKDielectric():
            return model.extension.kind == "drude"
    return False


def eps_static_limit(model: DielectricModel) -> float:
    """eps(i0), infinite for metals"""
    match model:
        case StaticDielectric():
            return model.eps0
        case TabulatedKKDielectric() if not is_metallic(model):
            if model.eps0 is not None:
                return model.eps0
            return float(_kk_many(model.table, model.extension, np.zeros(1))[0])
    return IDEAL_EPSILON


def _tabulated_key(model: TabulatedKKDielectric) -> tuple:
    ext = model.extension
    return (model.table.content_hash, ext.kind, ext.omega_p, ext.gamma)


@cached(_eps_cache, key=lambda model, xi: hashkey(_tabulated_key(model), xi), lock=_eps_cache_lock)
def _tabulated_eps(model: TabulatedKKDielectric, xi: float) -> float:
    return kk_eps_imag_axis(model.table, model.extension, xi)


def eval_dielectric(model: DielectricModel, xi: float) -> float:
    """eps(i xi) of any wall model; IDEAL_EPSILON stands for the ideal metal

    Args:
        model (DielectricModel): wall model
        xi (float): imaginary frequency in rad/s, non negative

    Returns:
        float: permittivity, the static limit at xi = 0
    """
    if not xi >= 0:
        message = f"Imaginary frequency must be non negative, got {xi}"
        raise DomainError(message)
    if xi == 0:
        return eps_static_limit(model)
    match model:
        case TabulatedKKDielectric():
            return _tabulated_eps(model, float(xi))
        case DrudeDielectric():
            return 1.0 + model.omega_p**2 / (xi * (xi + model.gamma))
        case PlasmaDielectric():
            return 1.0 + model.omega_p**2 / xi**2
        case StaticDielectric():
            return model.eps0
    return IDEAL_EPSILON


def static_ratio(model: DielectricModel) -> StaticRatio:
    """(eps(i0) - 1) / (eps(i0) + 1), exactly 1 for metals"""
    if is_metallic(model):
        return StaticRatio(value=1.0)
    eps0 = eps_static_limit(model)
    return StaticRatio(value=(eps0 - 1.0) / (eps0 + 1.0))


def build_eps_grid(model: DielectricModel, xis: list[float] | np.ndarray) -> EpsGrid:
    """Permittivity at every frequency of an ascending grid

    Args:
        model (DielectricModel): wall model
        xis (list[float] | np.ndarray): ascending imaginary frequencies

    Returns:
        EpsGrid: frequencies and permittivities
    """
    xis = np.asarray(xis, dtype=float)
    if np.any(np.diff(xis) < 0):
        message = "Frequencies of an eps grid must be sorted ascending"
        raise DomainError(message)
    if np.any(xis < 0):
        message = "Imaginary frequencies must be non negative"
        raise DomainError(message)
    eps = np.empty_like(xis)
    zero = xis == 0
    eps[zero] = eps_static_limit(model) if zero.any() else 0.0
    positive = xis[~zero]
    match model:
        case TabulatedKKDielectric():
            eps[~zero] = _kk_many(model.table, model.extension, positive) if len(positive) else positive
        case DrudeDielectric():
            eps[~zero] = 1.0 + model.omega_p**2 / (positive * (positive + model.gamma))
        case PlasmaDielectric():
            eps[~zero] = 1.0 + model.omega_p**2 / positive**2
        case StaticDielectric():
            eps[~zero] = model.eps0
        case IdealMetal():
            eps[~zero] = IDEAL_EPSILON
    return EpsGrid(xis=xis, eps=eps)


def model_fingerprint(model: DielectricModel) -> dict:
    """Canonical description of a wall model, used in cache keys"""
    payload = model.model_dump(mode="json", exclude={"table"})
    if isinstance(model, TabulatedKKDielectric):
        payload["table"] = {"provenance": model.table.provenance, "content_hash": model.table.content_hash}
    return payload


def describe(model: DielectricModel) -> str:
    """Short human label of a wall model"""
    match model:
        case TabulatedKKDielectric():
            suffix = "+drude" if model.extension.kind == "drude" else ""
            return f"tabulated({model.table.provenance}){suffix}"
        case DrudeDielectric():
            return "drude"
        case PlasmaDielectric():
            return "plasma"
        case StaticDielectric():
            return f"static({model.eps0:g})"
    return "ideal"

