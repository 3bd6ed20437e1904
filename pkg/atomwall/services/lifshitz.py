"""Lifshitz free energy of an atom near a wall as a sum over Matsubara frequencies"""

import math
import threading
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import quad, quad_vec

from atomwall.models.constants import (
    BOLTZMANN_K,
    HARTREE_IN_JOULE,
    HBAR,
    INTEGRAL_QUAD_LIMIT,
    INTEGRAL_RTOL,
    INTEGRAL_TAIL_RTOL,
    MATSUBARA_BLOCK,
    MATSUBARA_TAIL_FRACTION,
    MAX_ENGINE_SEPARATION_M,
    Y_CUTOFF,
    Y_INTEGRAL_RTOL,
    Y_QUAD_LIMIT,
)
from atomwall.models.exceptions import (
    DomainError,
    MatsubaraConvergenceError,
    PolarizabilityRangeError,
    QuadratureConvergenceError,
)
from atomwall.models.interfaces import (
    AutoPolicy,
    C3Value,
    DielectricModel,
    Diagnostics,
    FixedPolicy,
    GeometrySpec,
    IdealMetal,
    MatsubaraSpec,
    PolarizabilityModel,
    ReflectionPair,
    StaticDielectric,
    StaticPolarizability,
    TabulatedKKDielectric,
    TabulatedPolarizability,
    VdwPoint,
)
from atomwall.services.cache import EpsBlockCache
from atomwall.services.optics import build_eps_grid, eval_dielectric, kk_tail_bound, static_ratio
from atomwall.services.optics import describe as describe_wall
from atomwall.services.physconst import c3_from_au
from atomwall.services.polarizability import eval_alpha, eval_alpha_many, frequency_scale
from atomwall.services.polarizability import describe as describe_atom
from atomwall.utils.logging import get_logger

logger = get_logger("lifshitz")

# Accepted absolute error of a frequency integral that did not reach its tolerance, relative to the value
_INTEGRAL_ACCEPTABLE = 1e-6

BlockTerms = Callable[[int], tuple[np.ndarray, int]]


def matsubara_frequency(T: float, l: int) -> float:  # noqa: N803, E741
    """xi_l = 2 pi k_B T l / hbar in rad/s"""
    return 2.0 * math.pi * BOLTZMANN_K * T * l / HBAR


def matsubara_frequencies(T: float, start: int, count: int) -> np.ndarray:  # noqa: N803
    """xi_l for l = start .. start + count - 1"""
    return matsubara_frequency(T, 1) * np.arange(start, start + count, dtype=float)


def _reflection(eps: np.ndarray, zeta: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """r_par and r_perp for y > 0, infinite eps meaning the ideal metal"""
    ideal = np.isinf(eps)
    finite = np.where(ideal, 1.0, eps)
    s = np.sqrt(y**2 + zeta**2 * (finite - 1.0))
    # eps y - s and s - y rewritten without cancellation
    r_par = (finite - 1.0) * ((finite + 1.0) * y**2 - zeta**2) / (finite * y + s) ** 2
    r_perp = zeta**2 * (finite - 1.0) / (s + y) ** 2
    return np.where(ideal, 1.0, r_par), np.where(ideal, 1.0, r_perp)


def _bracket(eps: np.ndarray, zeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    r_par, r_perp = _reflection(eps, zeta, y)
    return 2.0 * y**2 * r_par + zeta**2 * (r_perp - r_par)


def _check_arguments(eps: float, zeta: float, y: float) -> None:
    if not 0 <= zeta <= y:
        message = f"Need y >= zeta >= 0, got zeta={zeta}, y={y}"
        raise DomainError(message)
    if not eps >= 1:
        message = f"Permittivity on the imaginary axis must be >= 1, got {eps}"
        raise DomainError(message)


def reflection_coeffs(eps: float, zeta: float, y: float) -> ReflectionPair:
    """Reflection coefficients of both polarizations in the dimensionless variables

    Args:
        eps (float): eps(i xi), math.inf for the ideal metal
        zeta (float): frequency in units of c / 2a
        y (float): wave vector variable, y >= zeta

    Returns:
        ReflectionPair: r_par and r_perp
    """
    _check_arguments(eps, zeta, y)
    if math.isinf(eps):
        return ReflectionPair(r_par=1.0, r_perp=1.0)
    if y == 0:
        return ReflectionPair(r_par=(eps - 1.0) / (eps + 1.0), r_perp=0.0)
    r_par, r_perp = _reflection(np.array([eps], dtype=float), np.array([zeta], dtype=float), np.array([y], dtype=float))
    return ReflectionPair(r_par=float(r_par[0]), r_perp=float(r_perp[0]))


def integrand(eps: float, zeta: float, y: float) -> float:
    """e^-y (2 y^2 r_par + zeta^2 (r_perp - r_par))"""
    pair = reflection_coeffs(eps, zeta, y)
    return math.exp(-y) * (2.0 * y**2 * pair.r_par + zeta**2 * (pair.r_perp - pair.r_par))


def _y_integrals(eps: np.ndarray, zeta: np.ndarray) -> tuple[np.ndarray, int]:
    """e^zeta times the integral of the integrand over y >= zeta, for every (eps, zeta)"""

    def shifted(t: float) -> np.ndarray:
        return math.exp(-t) * _bracket(eps, zeta, zeta + t)

    values, _error, info = quad_vec(
        shifted,
        0.0,
        Y_CUTOFF,
        epsrel=Y_INTEGRAL_RTOL,
        norm="max",
        limit=Y_QUAD_LIMIT,
        full_output=True,
    )
    if not info.success:
        message = f"y-integral did not converge: {info.message}"
        raise QuadratureConvergenceError(message)
    return values, int(info.neval)


def _terms(eps: np.ndarray, alpha: np.ndarray, zeta: np.ndarray) -> tuple[np.ndarray, int]:
    integrals, neval = _y_integrals(eps, zeta)
    return alpha * np.exp(-zeta) * integrals, neval


def matsubara_term_at(zeta: float, eps: float, alpha: float) -> float:
    """alpha times the y-integral at a given dimensionless frequency zeta > 0"""
    if not zeta > 0:
        message = f"Matsubara terms need zeta > 0, got {zeta}"
        raise DomainError(message)
    _check_arguments(eps, zeta, zeta)
    terms, _neval = _terms(np.array([eps], dtype=float), np.array([alpha], dtype=float), np.array([zeta], dtype=float))
    return float(terms[0])


def matsubara_term(l: int, eps_l: float, alpha_l: float, geometry: GeometrySpec, T: float) -> float:  # noqa: N803, E741
    """Contribution of the Matsubara frequency l >= 1 in a.u. before the k_B T / 8 prefactor

    Args:
        l (int): Matsubara index
        eps_l (float): eps(i xi_l)
        alpha_l (float): alpha(i xi_l) in a.u.
        geometry (GeometrySpec): separation
        T (float): temperature in K

    Returns:
        float: alpha_l times the integral over y from zeta_l to infinity
    """
    if l < 1:
        message = f"Matsubara terms start at l = 1, got {l}"
        raise DomainError(message)
    return matsubara_term_at(geometry.zeta(matsubara_frequency(T, l)), eps_l, alpha_l)


def _ratio(eps: np.ndarray) -> np.ndarray:
    """(eps - 1) / (eps + 1), 1 for the ideal metal"""
    ideal = np.isinf(eps)
    finite = np.where(ideal, 1.0, eps)
    return np.where(ideal, 1.0, (finite - 1.0) / (finite + 1.0))


class MatsubaraGrid:
    """eps and alpha at xi_l (l >= 1), built in blocks on demand and shared by a sweep"""

    def __init__(
        self,
        T: float,  # noqa: N803
        wall: DielectricModel,
        atom: PolarizabilityModel,
        cache: EpsBlockCache | None = None,
    ) -> None:
        self.T = T
        self.wall = wall
        self.atom = atom
        # only tabulated walls go to disk
        self.cache = cache if isinstance(wall, TabulatedKKDielectric) else None
        self.xi1 = matsubara_frequency(T, 1)
        self._blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._blocks) * MATSUBARA_BLOCK

    def block(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Frequencies, eps and alpha for l = index * MATSUBARA_BLOCK + 1 onward

        alpha is NaN where a tabulated polarizability ends.
        """
        with self._lock:
            while len(self._blocks) <= index:
                self._blocks.append(self._compute(len(self._blocks)))
            return self._blocks[index]

    def _compute(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        start = index * MATSUBARA_BLOCK + 1
        xis = matsubara_frequencies(self.T, start, MATSUBARA_BLOCK)
        if self.cache is None:
            eps = build_eps_grid(self.wall, xis).eps
        else:
            eps = self.cache.get_or_compute(self.wall, self.T, start, xis, lambda: build_eps_grid(self.wall, xis).eps)
        alpha = np.full_like(xis, np.nan)
        covered = xis <= self.atom.xi_max if isinstance(self.atom, TabulatedPolarizability) else np.ones_like(xis, bool)
        alpha[covered] = eval_alpha_many(self.atom, xis[covered])
        logger.debug("Matsubara block l=%s..%s of %s", start, start + MATSUBARA_BLOCK - 1, describe_wall(self.wall))
        return xis, eps, alpha

    def values(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies and eps for l = 1 .. count"""
        blocks = [self.block(index) for index in range(math.ceil(count / MATSUBARA_BLOCK))]
        if not blocks:
            return np.zeros(0), np.zeros(0)
        xis = np.concatenate([block[0] for block in blocks])[:count]
        eps = np.concatenate([block[1] for block in blocks])[:count]
        return xis, eps

    def range_error(self, l: int) -> PolarizabilityRangeError:  # noqa: E741
        """Error raised when the sum needs alpha above the tabulated range"""
        message = (
            f"Polarizability table '{describe_atom(self.atom)}' ends before xi_{l} = "
            f"{matsubara_frequency(self.T, l):.4e} rad/s needed by the Matsubara sum"
        )
        return PolarizabilityRangeError(message)


def _map_blocks(block_terms: BlockTerms, indices: Iterable[int], workers: int) -> list[tuple[np.ndarray, int]]:
    """Evaluate blocks, concurrently when asked, results in index order"""
    indices = list(indices)
    if workers <= 1 or len(indices) <= 1:
        return [block_terms(index) for index in indices]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(block_terms, indices))


def _first_stop(small: np.ndarray, run: int, consecutive: int) -> tuple[int | None, int]:
    """Index completing `consecutive` negligible terms in a row, and the run carried to the next block"""
    for position, flag in enumerate(small.tolist()):
        run = run + 1 if flag else 0
        if run >= consecutive:
            return position, run
    return None, run


def _tails(terms: np.ndarray, previous: float) -> np.ndarray:
    """Dropped tail after each term, assuming the terms keep decaying like the last two"""
    last = np.abs(terms)
    prior = np.abs(np.concatenate(([previous], terms[:-1])))[: len(terms)]
    decaying = (prior > 0) & (last < prior)
    ratio = np.divide(last, prior, out=np.ones_like(last), where=decaying)
    tails = last.copy()
    np.divide(last, 1.0 - ratio, out=tails, where=decaying)
    return tails


def _tail(kept: np.ndarray) -> float:
    """Sum of the dropped terms assuming they keep decaying like the last two"""
    if not len(kept):
        return 0.0
    previous = float(kept[-2]) if len(kept) > 1 else 0.0
    return float(_tails(kept[-1:], previous)[0])


def _truncated_sum(
    zero_term: float,
    block_terms: BlockTerms,
    policy: AutoPolicy | FixedPolicy,
    grid: MatsubaraGrid,
    workers: int,
    tail_fraction: float | None = None,
) -> tuple[float, int, int, float]:
    """Zero frequency term plus the Matsubara terms kept by the policy

    Under the auto policy the sum stops once `consecutive` terms in a row are below rel_tol of the running sum.
    With tail_fraction it then goes on until the estimated tail is below tail_fraction * rel_tol of the sum.

    Returns:
        tuple[float, int, int, float]: sum, number of terms, quadrature evaluations, estimated tail
    """
    accepted: list[np.ndarray] = []
    evals = 0
    if isinstance(policy, FixedPolicy):
        results = _map_blocks(block_terms, range(math.ceil(policy.l_max / MATSUBARA_BLOCK)), workers)
        for terms, neval in results:
            accepted.append(terms)
            evals += neval
        kept = np.concatenate(accepted)[: policy.l_max] if accepted else np.zeros(0)
        missing = np.flatnonzero(np.isnan(kept))
        if len(missing):
            raise grid.range_error(int(missing[0]) + 1)
        return math.fsum([zero_term, *kept.tolist()]), len(kept), evals, _tail(kept)

    running = zero_term
    previous = 0.0
    run = 0
    used = 0
    index = 0
    settled = False
    batch = max(workers, 1)
    while True:
        for terms, neval in _map_blocks(block_terms, range(index, index + batch), workers):
            evals += neval
            missing = np.flatnonzero(np.isnan(terms))
            usable = terms[: missing[0]] if len(missing) else terms
            partial = running + np.cumsum(usable)
            first = 0
            if not settled:
                small = np.abs(usable) <= policy.rel_tol * np.abs(partial)
                position, run = _first_stop(small, run, policy.consecutive)
                settled = position is not None
                first = position if position is not None else 0
            stop = None
            if settled and tail_fraction is None:
                stop = first
            elif settled:
                limit = tail_fraction * policy.rel_tol * np.abs(partial)
                done = np.flatnonzero(_tails(usable, previous)[first:] <= limit[first:])
                stop = first + int(done[0]) if len(done) else None
            kept = usable if stop is None else usable[: stop + 1]
            if used + len(kept) > policy.max_terms:
                message = (
                    f"Matsubara sum not converged after {policy.max_terms} terms "
                    f"(relative tolerance {policy.rel_tol:g})"
                )
                raise MatsubaraConvergenceError(message)
            accepted.append(kept)
            used += len(kept)
            if stop is not None:
                kept = np.concatenate(accepted)
                return math.fsum([zero_term, *kept.tolist()]), used, evals, _tail(kept)
            if len(missing):
                raise grid.range_error(used + 1)
            running = float(partial[-1])
            previous = float(usable[-1])
        index += batch


def _check_grid(grid: MatsubaraGrid, T: float, wall: DielectricModel, atom: PolarizabilityModel) -> None:  # noqa: N803
    if grid.T != T or grid.wall != wall or grid.atom != atom:
        message = "Matsubara grid was built for another temperature or other models"
        raise DomainError(message)


def compute_c3(
    geometry: GeometrySpec,
    matsubara: MatsubaraSpec,
    wall: DielectricModel,
    atom: PolarizabilityModel,
    grid: MatsubaraGrid | None = None,
    workers: int = 1,
) -> VdwPoint:
    """van der Waals coefficient C3(a, T) from the full Lifshitz formula

    Args:
        geometry (GeometrySpec): separation, at most 1 um
        matsubara (MatsubaraSpec): temperature and truncation policy
        wall (DielectricModel): wall permittivity
        atom (PolarizabilityModel): atomic polarizability
        grid (MatsubaraGrid | None): eps and alpha already evaluated for the same T and models
        workers (int): threads evaluating Matsubara blocks

    Returns:
        VdwPoint: C3, free energy and diagnostics
    """
    if not geometry.a <= MAX_ENGINE_SEPARATION_M:
        message = f"Separation {geometry.a} m outside (0, 1 um]"
        raise DomainError(message)
    if grid is None:
        grid = MatsubaraGrid(matsubara.T, wall, atom)
    _check_grid(grid, matsubara.T, wall, atom)

    def block_terms(index: int) -> tuple[np.ndarray, int]:
        xis, eps, alpha = grid.block(index)
        return _terms(eps, alpha, geometry.zeta(xis))

    zero_term = 2.0 * atom.alpha0 * static_ratio(wall).value
    total, used, evals, tail = _truncated_sum(
        zero_term, block_terms, matsubara.policy, grid, workers, tail_fraction=MATSUBARA_TAIL_FRACTION
    )
    c3_au = BOLTZMANN_K * matsubara.T * total / (8.0 * HARTREE_IN_JOULE)
    diagnostics = Diagnostics(
        l_used=used,
        quadrature_evals=evals,
        truncation_bound=tail / abs(total) if total else 0.0,
        kk_tail_bound=kk_tail_bound(wall, grid.xi1),
    )
    logger.debug(
        "C3(a=%.4e m, T=%s K) = %.9g a.u. with %s Matsubara terms, %s quadrature evaluations",
        geometry.a,
        matsubara.T,
        c3_au,
        used,
        evals,
    )
    return VdwPoint.from_c3(geometry.a, matsubara.T, c3_from_au(c3_au), diagnostics)


def compute_c3_nonrel(
    T: float,  # noqa: N803
    wall: DielectricModel,
    atom: PolarizabilityModel,
    matsubara: MatsubaraSpec | None = None,
    grid: MatsubaraGrid | None = None,
) -> C3Value:
    """Short separation limit (k_B T / 4) [alpha(0) r(0) + 2 sum alpha_l (eps_l - 1) / (eps_l + 1)]"""
    if matsubara is None:
        matsubara = MatsubaraSpec(T=T)
    if matsubara.T != T:
        message = f"Temperature {T} K differs from the Matsubara specification ({matsubara.T} K)"
        raise DomainError(message)
    if grid is None:
        grid = MatsubaraGrid(T, wall, atom)
    _check_grid(grid, T, wall, atom)

    def block_terms(index: int) -> tuple[np.ndarray, int]:
        _xis, eps, alpha = grid.block(index)
        return 2.0 * alpha * _ratio(eps), 0

    zero_term = atom.alpha0 * static_ratio(wall).value
    total, used, _evals, _tail_estimate = _truncated_sum(zero_term, block_terms, matsubara.policy, grid, workers=1)
    c3_au = BOLTZMANN_K * T * total / (4.0 * HARTREE_IN_JOULE)
    logger.debug("Nonrelativistic C3(T=%s K) = %.9g a.u. with %s Matsubara terms", T, c3_au, used)
    return c3_from_au(c3_au)


def _diverges(wall: DielectricModel, atom: PolarizabilityModel) -> bool:
    """Static alpha against a wall whose eps stays above 1 at high frequency"""
    return isinstance(atom, StaticPolarizability) and isinstance(wall, IdealMetal | StaticDielectric)


def _check_integral_tail(wall: DielectricModel, atom: TabulatedPolarizability, value: float) -> None:
    """Refuse a frequency integral whose part above the last tabulated alpha is not negligible

    Above xi_max, alpha is taken to fall like xi^-2 and the reflection ratio to stay below its value at xi_max.
    """
    xi_max = atom.xi_max
    eps = eval_dielectric(wall, xi_max)
    ratio = 1.0 if math.isinf(eps) else (eps - 1.0) / (eps + 1.0)
    tail = eval_alpha(atom, xi_max) * ratio * xi_max
    relative = tail / abs(value) if value else 0.0
    if relative > INTEGRAL_TAIL_RTOL:
        message = (
            f"Polarizability table '{describe_atom(atom)}' ends at {xi_max:.4e} rad/s, the frequency integral "
            f"above it is about {relative:.2e} of the value"
        )
        raise PolarizabilityRangeError(message)
    logger.debug("Frequency integral above the polarizability table bounded by %.2e of the value", relative)


def compute_c3_integral(wall: DielectricModel, atom: PolarizabilityModel) -> C3Value:
    """Zero temperature short separation limit (hbar / 4 pi) int alpha(i xi) (eps - 1) / (eps + 1) dxi

    The half line is mapped to [0, pi/2) by xi = scale * tan(theta).
    """
    if isinstance(atom, StaticPolarizability) and atom.alpha0 == 0:
        return c3_from_au(0.0)
    if _diverges(wall, atom):
        message = f"Frequency integral diverges for {describe_wall(wall)} with {describe_atom(atom)}"
        raise QuadratureConvergenceError(message)
    scale = frequency_scale(atom)
    theta_max = math.atan(atom.xi_max / scale) if isinstance(atom, TabulatedPolarizability) else math.pi / 2

    def mapped(theta: float) -> float:
        xi = scale * math.tan(theta)
        eps = eval_dielectric(wall, xi)
        ratio = 1.0 if math.isinf(eps) else (eps - 1.0) / (eps + 1.0)
        return eval_alpha(atom, xi) * ratio * scale / math.cos(theta) ** 2

    result = quad(mapped, 0.0, theta_max, epsabs=0.0, epsrel=INTEGRAL_RTOL, limit=INTEGRAL_QUAD_LIMIT, full_output=1)
    value, error = result[0], result[1]
    if len(result) > 3:  # noqa: PLR2004
        if not math.isfinite(value) or error > _INTEGRAL_ACCEPTABLE * abs(value):
            message = f"Frequency integral did not converge: {result[3]}"
            raise QuadratureConvergenceError(message)
        logger.warning("Frequency integral accepted with relative error %.2e: %s", error / abs(value), result[3])
    if isinstance(atom, TabulatedPolarizability):
        _check_integral_tail(wall, atom, value)
    c3_au = HBAR * value / (4.0 * math.pi * HARTREE_IN_JOULE)
    logger.debug("Frequency integral C3 = %.9g a.u. for %s with %s", c3_au, describe_wall(wall), describe_atom(atom))
    return c3_from_au(c3_au)


def sweep(
    separations: list[float],
    matsubara: MatsubaraSpec,
    wall: DielectricModel,
    atom: PolarizabilityModel,
    cache: EpsBlockCache | None = None,
    workers: int = 1,
    grid: MatsubaraGrid | None = None,
) -> list[VdwPoint]:
    """C3 at every separation (m, ascending), the Matsubara grid being shared"""
    if not separations:
        return []
    if any(a <= 0 for a in separations) or any(b < a for a, b in zip(separations, separations[1:], strict=False)):
        message = "Separations must be positive and sorted ascending"
        raise DomainError(message)
    if grid is None:
        grid = MatsubaraGrid(matsubara.T, wall, atom, cache)
    return [compute_c3(GeometrySpec(a=a), matsubara, wall, atom, grid=grid, workers=workers) for a in separations]


def compare_columns(reference: list[VdwPoint], other: list[VdwPoint]) -> list[float]:
    """Relative deviation |C3_other - C3_ref| / C3_ref at every separation"""
    if len(reference) != len(other):
        message = f"Columns differ in length: {len(reference)} and {len(other)}"
        raise DomainError(message)
    deviations = []
    for ref, point in zip(reference, other, strict=True):
        if not math.isclose(ref.a, point.a, rel_tol=1e-12):
            message = f"Columns differ in separation: {ref.a} and {point.a}"
            raise DomainError(message)
        if ref.C3.value_au == 0:
            message = f"Reference C3 vanishes at a = {ref.a} m"
            raise DomainError(message)
        deviations.append(abs(point.C3.value_au - ref.C3.value_au) / ref.C3.value_au)
    return deviations
