"""Exceptions for the atom-wall computations"""

from atomwall.models.constants import (
    CONFIG_ERROR,
    EXIT_DATA,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    LIFSHITZ_ERROR,
    OPTICS_ERROR,
    POLARIZABILITY_ERROR,
)


class AtomwallError(Exception):
    """Base class of every error raised by the package"""

    code: int = LIFSHITZ_ERROR
    exit_code: int = EXIT_NUMERICAL


class AtomwallGenericError(AtomwallError):
    """Error carrying an explicit code and exit code"""

    def __init__(self, message: str, code: int, exit_code: int = EXIT_NUMERICAL) -> None:
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code


class DomainError(AtomwallError, ValueError):
    """Raised when an argument lies outside the domain of a formula"""

    exit_code = EXIT_USAGE


class OpticalTableParseError(AtomwallError):
    """Raised when an optical table file cannot be parsed"""

    code = OPTICS_ERROR
    exit_code = EXIT_DATA


class OpticalTableValidationError(AtomwallError):
    """Raised when optical table content is not physical"""

    code = OPTICS_ERROR
    exit_code = EXIT_DATA


class DielectricConfigurationError(AtomwallError):
    """Raised when a dielectric model is configured inconsistently"""

    code = OPTICS_ERROR
    exit_code = EXIT_DATA


class PolarizabilityTableError(AtomwallError):
    """Raised when a polarizability table is malformed"""

    code = POLARIZABILITY_ERROR
    exit_code = EXIT_DATA


class PolarizabilityRangeError(AtomwallError):
    """Raised when a tabulated polarizability is requested above its last sample"""

    code = POLARIZABILITY_ERROR
    exit_code = EXIT_DATA


class QuadratureConvergenceError(AtomwallError):
    """Raised when an adaptive quadrature does not reach its tolerance"""


class MatsubaraConvergenceError(AtomwallError):
    """Raised when the Matsubara sum does not converge within the term cap"""


class UsageError(AtomwallError):
    """Raised when the command line or a model spec string is malformed"""

    code = CONFIG_ERROR
    exit_code = EXIT_USAGE


class ConfigFileError(AtomwallError):
    """Raised when the YAML configuration cannot be used"""

    code = CONFIG_ERROR
    exit_code = EXIT_IO


class DataFileError(AtomwallError):
    """Raised when a data file cannot be opened"""

    code = CONFIG_ERROR
    exit_code = EXIT_IO
