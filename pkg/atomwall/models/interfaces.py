"""Interfaces for the atom-wall computations"""

import hashlib
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from atomwall.models.constants import (
    MATSUBARA_CONSECUTIVE,
    MATSUBARA_MAX_TERMS,
    MATSUBARA_REL_TOL,
    MAX_ENGINE_SEPARATION_M,
    MAX_SEPARATION_M,
    NM_TO_M,
    SPEED_OF_LIGHT,
)
from atomwall.models.exceptions import (
    DielectricConfigurationError,
    OpticalTableValidationError,
    PolarizabilityTableError,
)


class UnitSystem(BaseModel):
    """Conversion constants between SI and atomic units"""

    model_config = ConfigDict(frozen=True)

    eV_to_rad_per_s: float  # noqa: N815
    au_polarizability_to_m3: float
    au_frequency_to_rad_per_s: float
    hartree_in_joule: float
    bohr_radius_in_m: float
    boltzmann_k: float
    hbar: float
    speed_of_light: float


class C3Value(BaseModel):
    """van der Waals coefficient in atomic and SI units"""

    model_config = ConfigDict(frozen=True)

    value_au: float
    value_SI: float  # noqa: N815


class OpticalTable(BaseModel):
    """Imaginary part of the permittivity sampled on the real frequency axis (rad/s)"""

    model_config = ConfigDict(frozen=True)

    samples: tuple[tuple[float, float], ...]
    provenance: str = ""

    _omega: np.ndarray = PrivateAttr()
    _im_eps: np.ndarray = PrivateAttr()
    _content_hash: str = PrivateAttr()

    @model_validator(mode="after")
    def check_samples(self) -> "OpticalTable":
        """Enforce positive strictly increasing frequencies and non negative absorption"""
        if not self.samples:
            message = "Optical table is empty"
            raise OpticalTableValidationError(message)
        omega = np.array([sample[0] for sample in self.samples], dtype=float)
        im_eps = np.array([sample[1] for sample in self.samples], dtype=float)
        if omega[0] <= 0:
            message = f"Optical table must start above zero frequency, got {omega[0]}"
            raise OpticalTableValidationError(message)
        if np.any(np.diff(omega) <= 0):
            message = "Optical table frequencies must be strictly increasing"
            raise OpticalTableValidationError(message)
        if np.any(im_eps < 0) or not np.all(np.isfinite(im_eps)):
            message = "Optical table contains a negative or non finite Im eps"
            raise OpticalTableValidationError(message)
        return self

    def model_post_init(self, __context: Any) -> None:  # noqa: ANN401
        """Keep numpy views of the samples and their digest"""
        self._omega = np.array([sample[0] for sample in self.samples], dtype="<f8")
        self._im_eps = np.array([sample[1] for sample in self.samples], dtype="<f8")
        digest = hashlib.sha256(self.provenance.encode("utf-8"))
        digest.update(self._omega.tobytes())
        digest.update(self._im_eps.tobytes())
        self._content_hash = digest.hexdigest()

    @property
    def content_hash(self) -> str:
        """SHA-256 of the provenance and samples"""
        return self._content_hash

    @property
    def omega(self) -> np.ndarray:
        """Sample frequencies in rad/s"""
        return self._omega

    @property
    def im_eps(self) -> np.ndarray:
        """Im eps at the sample frequencies"""
        return self._im_eps

    @property
    def source_range(self) -> tuple[float, float]:
        """Frequency span of the data"""
        return float(self._omega[0]), float(self._omega[-1])


class LowFreqExtension(BaseModel):
    """Extension of Im eps below the first tabulated frequency"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["none", "drude"] = "none"
    omega_p: float | None = Field(default=None, gt=0)
    gamma: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_parameters(self) -> "LowFreqExtension":
        """The Drude extension needs both parameters"""
        if self.kind == "drude" and (self.omega_p is None or self.gamma is None):
            message = "Drude extension requires omega_p > 0 and gamma > 0"
            raise DielectricConfigurationError(message)
        return self


class TabulatedKKDielectric(BaseModel):
    """Permittivity from optical data through the dispersion relation"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["tabulated_kk"] = "tabulated_kk"
    table: OpticalTable
    extension: LowFreqExtension = LowFreqExtension()
    metallic: bool = False
    eps0: float | None = Field(default=None, gt=1)

    @model_validator(mode="after")
    def check_extension(self) -> "TabulatedKKDielectric":
        """A metal misses its conduction contribution without the Drude extension"""
        if self.metallic and self.extension.kind == "none":
            message = (
                f"Tabulated metal '{self.table.provenance}' needs a low frequency extension, "
                "the dispersion integral would miss the conduction contribution"
            )
            raise DielectricConfigurationError(message)
        return self


class DrudeDielectric(BaseModel):
    """Drude model eps(i xi) = 1 + wp^2 / (xi (xi + gamma))"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["drude"] = "drude"
    omega_p: float = Field(gt=0)
    gamma: float = Field(gt=0)


class PlasmaDielectric(BaseModel):
    """Plasma model, Drude without relaxation"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["plasma"] = "plasma"
    omega_p: float = Field(gt=0)


class StaticDielectric(BaseModel):
    """Frequency independent permittivity"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["static"] = "static"
    eps0: float = Field(gt=1)


class IdealMetal(BaseModel):
    """Perfect reflector, every formula takes the eps -> infinity limit"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["ideal_metal"] = "ideal_metal"


DielectricModel = Annotated[
    TabulatedKKDielectric | DrudeDielectric | PlasmaDielectric | StaticDielectric | IdealMetal,
    Field(discriminator="kind"),
]


class StaticRatio(BaseModel):
    """(eps(i0) - 1) / (eps(i0) + 1)"""

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0, le=1)


class EpsGrid(BaseModel):
    """Permittivity precomputed at a list of imaginary frequencies"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xis: np.ndarray
    eps: np.ndarray

    def __len__(self) -> int:
        return len(self.xis)


class TabulatedPolarizability(BaseModel):
    """Atomic polarizability sampled at imaginary frequencies (rad/s, a.u.)"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["tabulated"] = "tabulated"
    samples: tuple[tuple[float, float], ...]
    provenance: str = ""

    @model_validator(mode="after")
    def check_samples(self) -> "TabulatedPolarizability":
        """Starts at xi = 0, frequencies strictly increasing, alpha positive and non-increasing"""
        if not self.samples:
            message = "Polarizability table is empty"
            raise PolarizabilityTableError(message)
        xis = np.array([xi for xi, _ in self.samples], dtype=float)
        alphas = np.array([alpha for _, alpha in self.samples], dtype=float)
        if xis[0] != 0:
            message = "Polarizability table must start at zero frequency (static polarizability)"
            raise PolarizabilityTableError(message)
        if np.any(np.diff(xis) <= 0):
            message = "Polarizability table frequencies must be strictly increasing"
            raise PolarizabilityTableError(message)
        if np.any(alphas <= 0) or not np.all(np.isfinite(alphas)):
            message = "Polarizability values must be positive"
            raise PolarizabilityTableError(message)
        rising = np.flatnonzero(np.diff(alphas) > 0)
        if len(rising):
            index = int(rising[0]) + 1
            message = f"Polarizability rises at row {index + 1} ({alphas[index - 1]:g} -> {alphas[index]:g} a.u.)"
            raise PolarizabilityTableError(message)
        return self

    @property
    def alpha0(self) -> float:
        """Static polarizability, the sample at zero frequency"""
        return self.samples[0][1]

    @property
    def xi_max(self) -> float:
        """Highest tabulated frequency"""
        return self.samples[-1][0]


class OscillatorPolarizability(BaseModel):
    """Single oscillator model alpha0 / (1 + xi^2 / omega0^2)"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["oscillator"] = "oscillator"
    alpha0: float = Field(gt=0)
    omega0: float = Field(gt=0)


class StaticPolarizability(BaseModel):
    """Frequency independent polarizability"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["static"] = "static"
    alpha0: float = Field(ge=0)


PolarizabilityModel = Annotated[
    TabulatedPolarizability | OscillatorPolarizability | StaticPolarizability,
    Field(discriminator="kind"),
]


class AutoPolicy(BaseModel):
    """Stop the Matsubara sum after consecutive negligible terms"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["auto"] = "auto"
    rel_tol: float = Field(default=MATSUBARA_REL_TOL, gt=0)
    consecutive: int = Field(default=MATSUBARA_CONSECUTIVE, ge=1)
    max_terms: int = Field(default=MATSUBARA_MAX_TERMS, ge=1)


class FixedPolicy(BaseModel):
    """Sum the Matsubara terms l = 1..l_max"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["fixed"] = "fixed"
    l_max: int = Field(ge=0)


class MatsubaraSpec(BaseModel):
    """Temperature and truncation of the Matsubara sum"""

    model_config = ConfigDict(frozen=True)

    T: float = Field(gt=0)
    policy: Annotated[AutoPolicy | FixedPolicy, Field(discriminator="kind")] = AutoPolicy()


class GeometrySpec(BaseModel):
    """Atom-wall separation and its characteristic frequency"""

    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0)

    @property
    def omega_c(self) -> float:
        """Characteristic frequency c / (2a)"""
        return SPEED_OF_LIGHT / (2.0 * self.a)

    def zeta(self, xi: float | np.ndarray) -> float | np.ndarray:
        """Dimensionless frequency xi / omega_c"""
        return xi / self.omega_c


class ReflectionPair(BaseModel):
    """Reflection coefficients of the two polarizations"""

    model_config = ConfigDict(frozen=True)

    r_par: float
    r_perp: float


class Diagnostics(BaseModel):
    """Convergence information of a computation"""

    model_config = ConfigDict(frozen=True)

    l_used: int = 0
    quadrature_evals: int = 0
    truncation_bound: float = 0.0
    kk_tail_bound: float = 0.0


class VdwPoint(BaseModel):
    """C3 and free energy at one separation"""

    model_config = ConfigDict(frozen=True)

    a: float
    T: float
    C3: C3Value
    F: float
    diagnostics: Diagnostics = Diagnostics()

    @staticmethod
    def from_c3(a: float, T: float, c3: C3Value, diagnostics: Diagnostics) -> "VdwPoint":  # noqa: N803
        """Build the point, the free energy being -C3 / a^3"""
        return VdwPoint(a=a, T=T, C3=c3, F=-c3.value_SI / a**3, diagnostics=diagnostics)

    @property
    def a_nm(self) -> float:
        """Separation in nanometers"""
        return self.a / NM_TO_M


class SeparationRange(BaseModel):
    """Separations generated between two bounds"""

    model_config = ConfigDict(frozen=True)

    min: float = Field(gt=0)
    max: float = Field(gt=0)
    count: int = Field(ge=1)
    scale: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def check_bounds(self) -> "SeparationRange":
        """min must not exceed max"""
        if self.min > self.max:
            message = f"Separation range minimum {self.min} exceeds maximum {self.max}"
            raise ValueError(message)
        return self

    def values(self) -> list[float]:
        """Separations in meters, ascending"""
        if self.count == 1:
            return [self.min]
        if self.scale == "log":
            return [float(v) for v in np.geomspace(self.min, self.max, self.count)]
        return [float(v) for v in np.linspace(self.min, self.max, self.count)]


class RunConfig(BaseModel):
    """Everything a command line run needs"""

    model_config = ConfigDict(frozen=True)

    walls: list[str] = Field(min_length=1)
    atoms: list[str] = Field(min_length=1)
    temperature_K: float = Field(gt=0)  # noqa: N815
    separations: list[float] = Field(min_length=1)
    output: Literal["csv", "table"] = "csv"
    emit: Literal["c3", "eps", "nonrel"] = "c3"
    cache_dir: Path | None = None
    out: Path | None = None
    workers: int = Field(default=1, ge=1)
    data_dir: Path | None = None
    labels: list[str] | None = None

    @model_validator(mode="after")
    def check_run(self) -> "RunConfig":
        """Separations within reach of the emitted product, 10 um for nonrel and 1 um otherwise, and pairable lists"""
        limit, label = (MAX_SEPARATION_M, "10 um") if self.emit == "nonrel" else (MAX_ENGINE_SEPARATION_M, "1 um")
        for separation in self.separations:
            if not 0 < separation <= limit:
                message = f"Separation {separation} m outside (0, {label}] for --emit {self.emit}"
                raise ValueError(message)
        if len(self.walls) != len(self.atoms) and 1 not in (len(self.walls), len(self.atoms)):
            message = "Give as many --wall as --atom, or a single one of either"
            raise ValueError(message)
        if self.labels is not None and len(self.labels) != max(len(self.walls), len(self.atoms)):
            message = "Give one label per wall and atom combination"
            raise ValueError(message)
        return self

    @property
    def combinations(self) -> list[tuple[str, str]]:
        """Pairs of (wall, atom) specs, a single entry being broadcast"""
        count = max(len(self.walls), len(self.atoms))
        walls = self.walls * count if len(self.walls) == 1 else self.walls
        atoms = self.atoms * count if len(self.atoms) == 1 else self.atoms
        return list(zip(walls, atoms, strict=True))
