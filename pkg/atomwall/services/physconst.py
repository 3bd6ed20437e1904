"""Unit conversions between SI and atomic units"""

import math

from atomwall.models.constants import (
    AU_FREQUENCY_TO_RAD_PER_S,
    AU_POLARIZABILITY_TO_M3,
    BOHR_RADIUS_IN_M,
    BOLTZMANN_K,
    EV_TO_RAD_PER_S,
    HARTREE_IN_JOULE,
    HBAR,
    NM_TO_M,
    SPEED_OF_LIGHT,
)
from atomwall.models.exceptions import DomainError
from atomwall.models.interfaces import C3Value, UnitSystem

UNITS = UnitSystem(
    eV_to_rad_per_s=EV_TO_RAD_PER_S,
    au_polarizability_to_m3=AU_POLARIZABILITY_TO_M3,
    au_frequency_to_rad_per_s=AU_FREQUENCY_TO_RAD_PER_S,
    hartree_in_joule=HARTREE_IN_JOULE,
    bohr_radius_in_m=BOHR_RADIUS_IN_M,
    boltzmann_k=BOLTZMANN_K,
    hbar=HBAR,
    speed_of_light=SPEED_OF_LIGHT,
)

# J m^3 carried by one hartree bohr^3
C3_AU_IN_SI: float = HARTREE_IN_JOULE * AU_POLARIZABILITY_TO_M3


def ev_to_angular(e: float) -> float:
    """Convert a photon energy in eV to an angular frequency in rad/s

    Args:
        e (float): energy in eV, non negative

    Returns:
        float: angular frequency in rad/s
    """
    if not e >= 0:
        message = f"Photon energy must be non negative, got {e} eV"
        raise DomainError(message)
    return e * EV_TO_RAD_PER_S


def angular_to_ev(omega: float) -> float:
    """Inverse of ev_to_angular"""
    if not omega >= 0:
        message = f"Angular frequency must be non negative, got {omega} rad/s"
        raise DomainError(message)
    return omega / EV_TO_RAD_PER_S


def au_frequency_to_angular(xi_au: float) -> float:
    """Atomic unit of frequency (hartree / hbar) to rad/s"""
    return xi_au * AU_FREQUENCY_TO_RAD_PER_S


def angular_to_au_frequency(omega: float) -> float:
    """rad/s to atomic unit of frequency"""
    return omega / AU_FREQUENCY_TO_RAD_PER_S


def nm_to_m(value: float) -> float:
    """Nanometers to meters"""
    return value * NM_TO_M


def m_to_nm(value: float) -> float:
    """Meters to nanometers"""
    return value / NM_TO_M


def c3_to_au(c3_SI: float) -> C3Value:  # noqa: N803
    """Express a C3 value given in J m^3 in both unit systems"""
    if not math.isfinite(c3_SI):
        message = f"C3 must be finite, got {c3_SI}"
        raise DomainError(message)
    return C3Value(value_au=c3_SI / C3_AU_IN_SI, value_SI=c3_SI)


def c3_from_au(c3_au: float) -> C3Value:
    """Express a C3 value given in hartree bohr^3 in both unit systems"""
    if not math.isfinite(c3_au):
        message = f"C3 must be finite, got {c3_au}"
        raise DomainError(message)
    return C3Value(value_au=c3_au, value_SI=c3_au * C3_AU_IN_SI)
