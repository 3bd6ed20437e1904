import json
import math
import os
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid

from atomwall.models.constants import (
    AU_FREQUENCY_TO_RAD_PER_S,
    BOLTZMANN_K,
    EV_TO_RAD_PER_S,
    HARTREE_IN_JOULE,
    SPEED_OF_LIGHT,
)
from atomwall.models.interfaces import (
    DielectricModel,
    OpticalTable,
    OscillatorPolarizability,
    PolarizabilityModel,
    TabulatedPolarizability,
)
from atomwall.services.lifshitz import matsubara_frequency
from atomwall.services.optics import drude_im_eps, eval_dielectric, static_ratio
from atomwall.services.polarizability import eval_alpha
from atomwall.utils.logging import AtomwallLoggerAdapter, get_logger

logger: AtomwallLoggerAdapter = get_logger("test.utils")

AU_PLASMA_FREQUENCY = 1.37e16
AU_GAMMA = 0.035 * EV_TO_RAD_PER_S

HE_STAR = OscillatorPolarizability(alpha0=315.63, omega0=1.18 * EV_TO_RAD_PER_S)
NA = OscillatorPolarizability(alpha0=162.68, omega0=1.55 * EV_TO_RAD_PER_S)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> Generator[None, None, None]:
    """Run every test without the settings of the calling shell, keeping the data directory"""
    for variable in ("APP_CONFIG_FILE", "DEV_MODE", "ATOMWALL_CACHE_DIR", "ATOMWALL_WORKERS"):
        monkeypatch.delenv(variable, raising=False)
    yield
    logger.debug("Environment restored")


def load_json(file: str, name: str) -> dict:
    """Load a JSON fixture stored next to the test module"""
    with (Path(file).parent / name).open(encoding="utf-8") as stream:
        return json.load(stream)


def data_file_or_skip(name: str) -> Path:
    """File of ATOMWALL_DATA_DIR, the test being skipped when it is absent"""
    data_dir = os.environ.get("ATOMWALL_DATA_DIR")
    if not data_dir or not (Path(data_dir) / name).is_file():
        pytest.skip(f"{name} not available in ATOMWALL_DATA_DIR")
    return Path(data_dir) / name


def drude_table(
    omega_p: float = AU_PLASMA_FREQUENCY,
    gamma: float = AU_GAMMA,
    count: int = 200,
    omega_min: float = 1e11,
    omega_max: float = 1e19,
) -> OpticalTable:
    """Drude absorption sampled at log spaced frequencies"""
    omegas = np.geomspace(omega_min, omega_max, count)
    values = drude_im_eps(omegas, omega_p, gamma)
    return OpticalTable(
        samples=tuple((float(omega), float(value)) for omega, value in zip(omegas, values, strict=True)),
        provenance="synthetic-drude",
    )


def vacuum_table() -> OpticalTable:
    """No absorption at all, eps(i xi) is 1"""
    samples = tuple((float(omega), 0.0) for omega in np.geomspace(1e13, 1e17, 20))
    return OpticalTable(samples=samples, provenance="vacuum")


def write_drude_csv(path: Path, count: int = 120) -> Path:
    """Drude absorption of gold as an energy_eV,im_eps file"""
    energies = np.geomspace(1e-3, 1e3, count)
    values = drude_im_eps(energies * EV_TO_RAD_PER_S, AU_PLASMA_FREQUENCY, AU_GAMMA)
    lines = ["# synthetic gold", "# columns: energy_eV,im_eps"]
    lines += [f"{energy!r},{value!r}" for energy, value in zip(energies.tolist(), values.tolist(), strict=True)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def naive_c3(
    a: float,
    T: float,  # noqa: N803
    wall: DielectricModel,
    atom: PolarizabilityModel,
    l_max: int,
    step: float = 1e-3,
) -> float:
    """C3 in a.u. from a fixed trapezoid grid in y up to zeta + 60 and a fixed number of terms"""
    omega_c = SPEED_OF_LIGHT / (2.0 * a)
    total = 2.0 * atom.alpha0 * static_ratio(wall).value
    offsets = np.arange(0.0, 60.0 + step / 2, step)
    for index in range(1, l_max + 1):
        xi = matsubara_frequency(T, index)
        zeta = xi / omega_c
        eps = eval_dielectric(wall, xi)
        y = zeta + offsets
        if math.isinf(eps):
            r_par = np.ones_like(y)
            r_perp = np.ones_like(y)
        else:
            root = np.sqrt(y**2 + zeta**2 * (eps - 1.0))
            r_par = (eps * y - root) / (eps * y + root)
            r_perp = (root - y) / (root + y)
        values = np.exp(-y) * (2.0 * y**2 * r_par + zeta**2 * (r_perp - r_par))
        total += eval_alpha(atom, xi) * trapezoid(values, y)
    return BOLTZMANN_K * T * total / (8.0 * HARTREE_IN_JOULE)


def oscillator_table(
    atom: OscillatorPolarizability,
    xi_max_au: float = 1e2,
    count: int = 400,
) -> TabulatedPolarizability:
    """Single oscillator alpha sampled at 0 and at log spaced frequencies up to xi_max_au"""
    xis = np.concatenate(([0.0], np.geomspace(1e-4, xi_max_au, count))) * AU_FREQUENCY_TO_RAD_PER_S
    alphas = atom.alpha0 / (1.0 + (xis / atom.omega0) ** 2)
    samples = tuple((float(xi), float(alpha)) for xi, alpha in zip(xis, alphas, strict=True))
    return TabulatedPolarizability(samples=samples, provenance=f"oscillator-{xi_max_au:g}au")


def lorentz_table(eps0: float, omega0_ev: float, gamma_ev: float, count: int = 400) -> OpticalTable:
    """Absorption of a single Lorentz oscillator of static permittivity eps0"""
    omegas = np.geomspace(1e13, 1e18, count)
    omega0 = omega0_ev * EV_TO_RAD_PER_S
    gamma = gamma_ev * EV_TO_RAD_PER_S
    values = (eps0 - 1.0) * omega0**2 * gamma * omegas / ((omega0**2 - omegas**2) ** 2 + (gamma * omegas) ** 2)
    return OpticalTable(
        samples=tuple((float(omega), float(value)) for omega, value in zip(omegas, values, strict=True)),
        provenance="synthetic-lorentz",
    )


def write_synthetic_data(directory: Path) -> Path:
    """Data directory holding every catalog file, built from closed form models

    au.csv is Drude absorption, si.csv and sio2.csv single Lorentz oscillators,
    the polarizability files the single oscillator He* and Na.
    """
    optical = {
        "au.csv": drude_table(),
        "si.csv": lorentz_table(11.66, 4.0, 0.5),
        "sio2.csv": lorentz_table(4.88, 10.0, 1.0),
    }
    for name, table in optical.items():
        rows = [f"{omega / EV_TO_RAD_PER_S!r},{value!r}" for omega, value in table.samples]
        (directory / name).write_text("\n".join(["# columns: energy_eV,im_eps", *rows]) + "\n", encoding="utf-8")
    for name, atom in (("he_star_alpha.csv", HE_STAR), ("na_alpha.csv", NA)):
        rows = [f"{xi / AU_FREQUENCY_TO_RAD_PER_S!r},{alpha!r}" for xi, alpha in oscillator_table(atom).samples]
        (directory / name).write_text("\n".join(["# columns: xi_au,alpha_au", *rows]) + "\n", encoding="utf-8")
    logger.debug("Synthetic data written to %s", directory)
    return directory
