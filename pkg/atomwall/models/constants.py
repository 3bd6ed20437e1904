"""Constants for the atom-wall computations"""

import math

from scipy import constants as codata

# CODATA values, SI
HBAR: float = codata.hbar
BOLTZMANN_K: float = codata.k
SPEED_OF_LIGHT: float = codata.c
ELEMENTARY_CHARGE: float = codata.e
HARTREE_IN_JOULE: float = codata.physical_constants["Hartree energy"][0]
BOHR_RADIUS_IN_M: float = codata.physical_constants["Bohr radius"][0]

EV_TO_RAD_PER_S: float = ELEMENTARY_CHARGE / HBAR
AU_POLARIZABILITY_TO_M3: float = BOHR_RADIUS_IN_M**3
# Atomic unit of angular frequency, hartree / hbar
AU_FREQUENCY_TO_RAD_PER_S: float = HARTREE_IN_JOULE / HBAR
NM_TO_M: float = 1e-9

# Quoted values the CODATA constants must reproduce to 4 significant figures
QUOTED_EV_TO_RAD_PER_S: float = 1.519e15
QUOTED_AU_POLARIZABILITY_TO_M3: float = 1.48e-31

# Sentinel permittivity of the ideal metal, formulas take the eps -> infinity limit
IDEAL_EPSILON: float = math.inf

# Kramers-Kronig transform
KK_RTOL: float = 1e-8
KK_GAUSS_ORDER: int = 8
KK_MAX_BISECTIONS: int = 30
KK_XI_CHUNK: int = 128

# y-integral of a Matsubara term, y = zeta + t with t in [0, Y_CUTOFF]
Y_INTEGRAL_RTOL: float = 1e-9
Y_CUTOFF: float = 60.0
Y_QUAD_LIMIT: int = 2000

# Matsubara summation
MATSUBARA_REL_TOL: float = 1e-8
MATSUBARA_CONSECUTIVE: int = 3
MATSUBARA_MAX_TERMS: int = 500_000
MATSUBARA_BLOCK: int = 256
# Full C3 sums go on until the estimated dropped tail is this fraction of rel_tol times the sum
MATSUBARA_TAIL_FRACTION: float = 0.5

# Frequency integral of the nonrelativistic limit
INTEGRAL_RTOL: float = 1e-10
INTEGRAL_QUAD_LIMIT: int = 500
# Largest integral dropped above a tabulated polarizability, relative to the value, alpha ~ xi^-2 assumed
INTEGRAL_TAIL_RTOL: float = 1e-3

# Valid separations for a run
MAX_SEPARATION_M: float = 10e-6
MAX_ENGINE_SEPARATION_M: float = 1e-6

# Printed precision
TABLE_SIGNIFICANT_DIGITS: int = 3
CSV_SIGNIFICANT_DIGITS: int = 9

# Error codes
OPTICS_ERROR = 31001
POLARIZABILITY_ERROR = 31002
LIFSHITZ_ERROR = 31003
CONFIG_ERROR = 31004

# Process exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERICAL = 5

DEFAULT_TEMPERATURE_K: float = 300.0
