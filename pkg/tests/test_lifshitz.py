import io
import math

import pytest

from atomwall.models.constants import AU_FREQUENCY_TO_RAD_PER_S, SPEED_OF_LIGHT
from atomwall.models.exceptions import (
    DomainError,
    MatsubaraConvergenceError,
    PolarizabilityRangeError,
    QuadratureConvergenceError,
)
from atomwall.models.interfaces import (
    AutoPolicy,
    FixedPolicy,
    GeometrySpec,
    IdealMetal,
    MatsubaraSpec,
    PlasmaDielectric,
    StaticDielectric,
    StaticPolarizability,
    TabulatedKKDielectric,
)
from atomwall.services.lifshitz import (
    MatsubaraGrid,
    compare_columns,
    compute_c3,
    compute_c3_integral,
    compute_c3_nonrel,
    integrand,
    matsubara_frequencies,
    matsubara_frequency,
    matsubara_term,
    matsubara_term_at,
    reflection_coeffs,
    sweep,
)
from atomwall.services.polarizability import load_alpha_table

from .test_polarizability import HE_STAR_TABLE
from .utils import (  # noqa: F401
    AU_PLASMA_FREQUENCY,
    HE_STAR,
    NA,
    clean_environment,
    naive_c3,
    oscillator_table,
    vacuum_table,
)

T_ROOM = 300.0
ROOM = MatsubaraSpec(T=T_ROOM)
PLASMA = PlasmaDielectric(omega_p=AU_PLASMA_FREQUENCY)
NM = 1e-9


def c3_au(a_nm: float, wall, atom, matsubara: MatsubaraSpec = ROOM) -> float:  # noqa: ANN001
    return compute_c3(GeometrySpec(a=a_nm * NM), matsubara, wall, atom).C3.value_au


@pytest.mark.unit
def test_matsubara_frequencies():
    assert float(f"{matsubara_frequency(T_ROOM, 1):.3g}") == 2.47e14
    xis = matsubara_frequencies(T_ROOM, 0, 4)
    assert xis[0] == 0.0
    assert xis.tolist() == pytest.approx([0.0, xis[1], 2 * xis[1], 3 * xis[1]], rel=1e-15)


@pytest.mark.unit
def test_geometry():
    geometry = GeometrySpec(a=150 * NM)
    assert geometry.omega_c == pytest.approx(SPEED_OF_LIGHT / (300 * NM))
    assert geometry.zeta(geometry.omega_c) == pytest.approx(1.0)


@pytest.mark.unit
def test_reflection_limits():
    static = reflection_coeffs(3.0, 0.0, 2.0)
    assert static.r_par == pytest.approx(0.5)
    assert static.r_perp == 0.0
    vacuum = reflection_coeffs(1.0, 0.5, 1.0)
    assert (vacuum.r_par, vacuum.r_perp) == (0.0, 0.0)
    ideal = reflection_coeffs(math.inf, 0.3, 0.7)
    assert (ideal.r_par, ideal.r_perp) == (1.0, 1.0)
    assert reflection_coeffs(3.0, 0.0, 0.0).r_par == pytest.approx(0.5)


@pytest.mark.unit
def test_reflection_closed_form():
    pair = reflection_coeffs(2.0, 1.0, 1.0)
    root = math.sqrt(2.0)
    assert pair.r_par == pytest.approx((2 - root) / (2 + root), rel=1e-14)
    assert pair.r_perp == pytest.approx((root - 1) / (root + 1), rel=1e-14)
    for eps in (1.0001, 2.0, 80.0, 1e6):
        for zeta, y in ((0.01, 0.02), (1.0, 3.0), (5.0, 5.0)):
            pair = reflection_coeffs(eps, zeta, y)
            assert 0.0 <= pair.r_par <= 1.0
            assert 0.0 <= pair.r_perp <= 1.0


@pytest.mark.unit
def test_reflection_domain():
    with pytest.raises(DomainError):
        reflection_coeffs(2.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        reflection_coeffs(0.5, 0.1, 0.5)


@pytest.mark.unit
def test_integrand():
    assert integrand(math.inf, 0.4, 1.3) == pytest.approx(math.exp(-1.3) * 2 * 1.3**2, rel=1e-15)
    assert integrand(1.0, 0.4, 1.3) == 0.0
    r_par = (2 - math.sqrt(2)) / (2 + math.sqrt(2))
    r_perp = (math.sqrt(2) - 1) / (math.sqrt(2) + 1)
    assert integrand(2.0, 1.0, 1.0) == pytest.approx(math.exp(-1) * (2 * r_par + (r_perp - r_par)), rel=1e-14)


@pytest.mark.unit
@pytest.mark.parametrize("zeta", [1e-3, 0.1, 1.0, 10.0])
def test_ideal_metal_term_matches_closed_form(zeta: float):
    alpha = 123.4
    expected = alpha * 2 * math.exp(-zeta) * (zeta**2 + 2 * zeta + 2)
    assert matsubara_term_at(zeta, math.inf, alpha) == pytest.approx(expected, rel=1e-9)


@pytest.mark.unit
def test_matsubara_term():
    geometry = GeometrySpec(a=10 * NM)
    zeta = geometry.zeta(matsubara_frequency(T_ROOM, 7))
    assert matsubara_term(7, 5.0, 100.0, geometry, T_ROOM) == matsubara_term_at(zeta, 5.0, 100.0)
    assert matsubara_term(7, 5.0, 0.0, geometry, T_ROOM) == 0.0
    assert matsubara_term(7, 1.0, 100.0, geometry, T_ROOM) == 0.0
    with pytest.raises(DomainError):
        matsubara_term(0, 5.0, 100.0, geometry, T_ROOM)


@pytest.mark.unit
def test_vacuum_wall_gives_zero():
    wall = TabulatedKKDielectric(table=vacuum_table())
    point = compute_c3(GeometrySpec(a=3 * NM), ROOM, wall, HE_STAR)
    assert point.C3.value_au == 0.0
    assert point.F == 0.0
    assert compute_c3_nonrel(T_ROOM, wall, HE_STAR).value_au == 0.0


@pytest.mark.component
def test_nonrelativistic_limit_of_ideal_metal():
    expected = HE_STAR.alpha0 * HE_STAR.omega0 / AU_FREQUENCY_TO_RAD_PER_S / 8
    assert expected == pytest.approx(1.711, abs=5e-4)
    assert compute_c3_integral(IdealMetal(), HE_STAR).value_au == pytest.approx(expected, rel=1e-6)
    assert compute_c3_nonrel(T_ROOM, IdealMetal(), HE_STAR).value_au == pytest.approx(expected, rel=5e-3)
    assert c3_au(1.0, IdealMetal(), HE_STAR) == pytest.approx(expected, rel=2e-2)


@pytest.mark.component
def test_integral_agrees_with_sum():
    for wall in (PLASMA, StaticDielectric(eps0=4.88)):
        integral = compute_c3_integral(wall, NA).value_au
        assert compute_c3_nonrel(T_ROOM, wall, NA).value_au == pytest.approx(integral, rel=5e-3)


@pytest.mark.component
def test_integral_needs_the_whole_polarizability_table():
    short = load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,315.63\n0.01,290.0\n0.03,213.0\n"))
    with pytest.raises(PolarizabilityRangeError):
        compute_c3_integral(IdealMetal(), short)
    with pytest.raises(PolarizabilityRangeError):
        compute_c3_integral(PLASMA, load_alpha_table(io.StringIO(HE_STAR_TABLE)))
    dense = oscillator_table(HE_STAR, xi_max_au=1e5, count=300)
    expected = compute_c3_integral(IdealMetal(), HE_STAR).value_au
    assert compute_c3_integral(IdealMetal(), dense).value_au == pytest.approx(expected, rel=1e-3)


@pytest.mark.unit
def test_integral_of_vanishing_polarizability():
    assert compute_c3_integral(PLASMA, StaticPolarizability(alpha0=0.0)).value_au == 0.0


@pytest.mark.component
def test_static_polarizability_diverges_without_retardation():
    static = StaticPolarizability(alpha0=HE_STAR.alpha0)
    with pytest.raises(QuadratureConvergenceError):
        compute_c3_integral(IdealMetal(), static)
    with pytest.raises(MatsubaraConvergenceError):
        compute_c3_nonrel(T_ROOM, IdealMetal(), static)
    # retardation keeps the full expression finite
    assert c3_au(3.0, IdealMetal(), static) > c3_au(3.0, IdealMetal(), HE_STAR)


@pytest.mark.component
def test_decreasing_with_separation_and_ordering():
    separations = [3.0, 10.0, 30.0, 100.0, 150.0]
    walls = [IdealMetal(), PLASMA, StaticDielectric(eps0=11.66), StaticDielectric(eps0=4.88)]
    columns = [sweep([a * NM for a in separations], ROOM, wall, HE_STAR) for wall in walls]
    for column in columns:
        values = [point.C3.value_au for point in column]
        assert all(later < earlier for earlier, later in zip(values, values[1:], strict=False))
        for point in column:
            assert point.C3.value_au > 0
            assert point.F < 0
            assert point.F * point.a**3 == pytest.approx(-point.C3.value_SI, rel=1e-12)
    ideal = columns[0]
    for column in columns[1:]:
        for reference, point in zip(ideal, column, strict=True):
            assert reference.C3.value_au >= point.C3.value_au


@pytest.mark.component
def test_temperature_insensitivity_at_short_range():
    cold = c3_au(3.0, PLASMA, HE_STAR, MatsubaraSpec(T=77.0))
    warm = c3_au(3.0, PLASMA, HE_STAR)
    assert abs(warm - cold) / warm < 5e-3


@pytest.mark.component
@pytest.mark.parametrize("wall", [IdealMetal(), StaticDielectric(eps0=4.88), PLASMA], ids=["ideal", "static", "plasma"])
@pytest.mark.parametrize("a_nm", [3.0, 30.0, 150.0])
def test_matches_naive_evaluator(wall, a_nm: float):  # noqa: ANN001
    l_max = 150
    fixed = MatsubaraSpec(T=T_ROOM, policy=FixedPolicy(l_max=l_max))
    engine = compute_c3(GeometrySpec(a=a_nm * NM), fixed, wall, HE_STAR)
    assert engine.diagnostics.l_used == l_max
    assert engine.C3.value_au == pytest.approx(naive_c3(a_nm * NM, T_ROOM, wall, HE_STAR, l_max), rel=1e-6)


@pytest.mark.component
def test_auto_truncation_diagnostics():
    short = compute_c3(GeometrySpec(a=3 * NM), ROOM, IdealMetal(), HE_STAR)
    assert 500 < short.diagnostics.l_used < 5000
    assert short.diagnostics.quadrature_evals > 0
    assert short.diagnostics.kk_tail_bound == 0.0
    long = compute_c3(GeometrySpec(a=150 * NM), ROOM, IdealMetal(), HE_STAR)
    assert long.diagnostics.l_used < 200


@pytest.mark.component
@pytest.mark.parametrize("wall", [IdealMetal(), PLASMA], ids=["ideal", "plasma"])
@pytest.mark.parametrize("a_nm", [3.0, 30.0])
def test_doubling_the_terms_stays_within_tolerance(wall, a_nm: float):  # noqa: ANN001
    rel_tol = ROOM.policy.rel_tol
    auto = compute_c3(GeometrySpec(a=a_nm * NM), ROOM, wall, HE_STAR)
    assert auto.diagnostics.truncation_bound <= rel_tol
    doubled = MatsubaraSpec(T=T_ROOM, policy=FixedPolicy(l_max=2 * auto.diagnostics.l_used))
    reference = compute_c3(GeometrySpec(a=a_nm * NM), doubled, wall, HE_STAR)
    change = abs(reference.C3.value_au - auto.C3.value_au) / reference.C3.value_au
    assert change < rel_tol


@pytest.mark.unit
def test_fixed_policy_without_terms_keeps_zero_frequency():
    zero_only = MatsubaraSpec(T=T_ROOM, policy=FixedPolicy(l_max=0))
    point = compute_c3(GeometrySpec(a=3 * NM), zero_only, IdealMetal(), HE_STAR)
    assert point.diagnostics.l_used == 0
    assert point.C3.value_au == pytest.approx(c3_au_of_zero_term(HE_STAR.alpha0), rel=1e-12)


def c3_au_of_zero_term(alpha0: float) -> float:
    from atomwall.models.constants import BOLTZMANN_K, HARTREE_IN_JOULE

    return BOLTZMANN_K * T_ROOM * 2 * alpha0 / (8 * HARTREE_IN_JOULE)


@pytest.mark.unit
def test_term_cap():
    capped = MatsubaraSpec(T=T_ROOM, policy=AutoPolicy(max_terms=10))
    with pytest.raises(MatsubaraConvergenceError):
        compute_c3(GeometrySpec(a=3 * NM), capped, IdealMetal(), HE_STAR)


@pytest.mark.component
def test_polarizability_table_range():
    table = load_alpha_table(io.StringIO(HE_STAR_TABLE), provenance="he")
    assert c3_au(150.0, IdealMetal(), table) > 0
    with pytest.raises(PolarizabilityRangeError):
        c3_au(3.0, IdealMetal(), table)


@pytest.mark.component
def test_sweep():
    assert sweep([], ROOM, PLASMA, HE_STAR) == []
    single = sweep([20 * NM], ROOM, PLASMA, HE_STAR)
    assert single == [compute_c3(GeometrySpec(a=20 * NM), ROOM, PLASMA, HE_STAR)]
    with pytest.raises(DomainError):
        sweep([20 * NM, 10 * NM], ROOM, PLASMA, HE_STAR)
    with pytest.raises(DomainError):
        compute_c3(GeometrySpec(a=2e-6), ROOM, PLASMA, HE_STAR)


@pytest.mark.component
def test_parallel_blocks_are_deterministic():
    serial = compute_c3(GeometrySpec(a=3 * NM), ROOM, PLASMA, NA)
    parallel = compute_c3(GeometrySpec(a=3 * NM), ROOM, PLASMA, NA, workers=4)
    assert parallel.C3 == serial.C3
    assert parallel.diagnostics.l_used == serial.diagnostics.l_used


@pytest.mark.unit
def test_grid_must_match():
    grid = MatsubaraGrid(77.0, PLASMA, HE_STAR)
    with pytest.raises(DomainError):
        compute_c3(GeometrySpec(a=3 * NM), ROOM, PLASMA, HE_STAR, grid=grid)


@pytest.mark.component
def test_compare_columns():
    separations = [3 * NM, 15 * NM]
    reference = sweep(separations, ROOM, PLASMA, HE_STAR)
    static = sweep(separations, ROOM, PLASMA, StaticPolarizability(alpha0=HE_STAR.alpha0))
    deviations = compare_columns(reference, static)
    assert len(deviations) == 2
    assert deviations[0] > deviations[1] > 0
    assert compare_columns(reference, reference) == [0.0, 0.0]
    with pytest.raises(DomainError):
        compare_columns(reference, static[:1])
