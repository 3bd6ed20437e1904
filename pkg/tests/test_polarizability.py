import io

import numpy as np
import pytest

from atomwall.models.constants import AU_FREQUENCY_TO_RAD_PER_S, EV_TO_RAD_PER_S
from atomwall.models.exceptions import DataFileError, DomainError, PolarizabilityRangeError, PolarizabilityTableError
from atomwall.models.interfaces import StaticPolarizability, TabulatedPolarizability
from atomwall.services.polarizability import (
    describe,
    eval_alpha,
    eval_alpha_many,
    frequency_scale,
    load_alpha_table,
    load_alpha_table_file,
)

from .utils import HE_STAR, NA, clean_environment, oscillator_table  # noqa: F401

HE_STAR_TABLE = """# oscillator sampled in atomic units
# columns: xi_au,alpha_au
0.0,315.63
0.01,290.0
0.03,213.0
0.0434,157.8
0.1,50.0
0.5,2.5
2.0,0.2
"""


@pytest.mark.unit
def test_oscillator():
    assert eval_alpha(HE_STAR, 0.0) == 315.63
    assert eval_alpha(HE_STAR, HE_STAR.omega0) == pytest.approx(315.63 / 2)
    values = eval_alpha_many(HE_STAR, np.geomspace(1e13, 1e18, 50))
    assert np.all(np.diff(values) < 0)


@pytest.mark.unit
def test_static():
    static = StaticPolarizability(alpha0=162.68)
    assert eval_alpha(static, 1e16) == 162.68
    assert eval_alpha(StaticPolarizability(alpha0=0.0), 1e15) == 0.0
    with pytest.raises(DomainError):
        eval_alpha(static, -1.0)


@pytest.mark.unit
def test_tabulated_nodes_and_range():
    table = load_alpha_table(io.StringIO(HE_STAR_TABLE), provenance="he")
    assert table.alpha0 == 315.63
    assert table.xi_max == pytest.approx(2.0 * AU_FREQUENCY_TO_RAD_PER_S)
    for xi_au, alpha in [(0.0, 315.63), (0.03, 213.0), (0.5, 2.5), (2.0, 0.2)]:
        assert eval_alpha(table, xi_au * AU_FREQUENCY_TO_RAD_PER_S) == pytest.approx(alpha, rel=1e-12)
    between = eval_alpha_many(table, np.linspace(0.0, 2.0, 200) * AU_FREQUENCY_TO_RAD_PER_S)
    assert np.all(np.diff(between) <= 0)
    with pytest.raises(PolarizabilityRangeError):
        eval_alpha(table, 2.5 * AU_FREQUENCY_TO_RAD_PER_S)


@pytest.mark.unit
def test_tabulated_in_electronvolts():
    table = load_alpha_table(io.StringIO("# columns: xi_eV,alpha_au\n0,100\n1,50\n"))
    assert table.xi_max == pytest.approx(EV_TO_RAD_PER_S)
    assert eval_alpha(table, EV_TO_RAD_PER_S) == pytest.approx(50.0)


@pytest.mark.unit
def test_single_row_table():
    table = load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,100\n"))
    assert eval_alpha(table, 0.0) == 100.0
    with pytest.raises(PolarizabilityRangeError):
        eval_alpha(table, 1e14)


@pytest.mark.unit
def test_table_errors():
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0.1,100\n0.2,50\n"))
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,100\n0.2,50\n0.2,40\n"))
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,100\n0.2,-5\n"))
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("0,100\n0.2,50\n"))
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n"))
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au,beta\n0,1,2\n"))
    with pytest.raises(DataFileError):
        load_alpha_table_file("/nonexistent/he.csv")


@pytest.mark.unit
def test_rising_polarizability_is_refused():
    with pytest.raises(PolarizabilityTableError):
        load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,100\n0.1,200\n0.2,50\n"))
    with pytest.raises(PolarizabilityTableError):
        TabulatedPolarizability(samples=((0.0, 100.0), (1e15, 100.5)))
    with pytest.raises(PolarizabilityTableError):
        TabulatedPolarizability(samples=())
    flat = TabulatedPolarizability(samples=((0.0, 100.0), (1e15, 100.0), (2e15, 40.0)))
    assert eval_alpha(flat, 5e14) == pytest.approx(100.0)


@pytest.mark.unit
def test_two_row_table_stays_between_samples():
    table = load_alpha_table(io.StringIO("# columns: xi_au,alpha_au\n0,10\n0.2,1\n"))
    midpoint = eval_alpha(table, 0.1 * AU_FREQUENCY_TO_RAD_PER_S)
    assert 1.0 < midpoint < 10.0
    values = eval_alpha_many(table, np.linspace(0.0, 0.2, 101) * AU_FREQUENCY_TO_RAD_PER_S)
    assert np.all((values >= 1.0 - 1e-12) & (values <= 10.0 + 1e-12))


@pytest.mark.unit
@pytest.mark.parametrize("atom", [HE_STAR, NA], ids=["he_star", "na"])
def test_dense_oscillator_table_matches_closed_form(atom):  # noqa: ANN001
    table = oscillator_table(atom, count=1200)
    xis = np.concatenate(([0.0], np.geomspace(1e-4, 99.0, 2000))) * AU_FREQUENCY_TO_RAD_PER_S
    expected = eval_alpha_many(atom, xis)
    assert np.max(np.abs(eval_alpha_many(table, xis) / expected - 1.0)) < 1e-4  # noqa: PLR2004


@pytest.mark.unit
def test_frequency_scale_and_label():
    table = load_alpha_table(io.StringIO(HE_STAR_TABLE), provenance="he")
    assert frequency_scale(HE_STAR) == HE_STAR.omega0
    assert frequency_scale(table) == pytest.approx(0.0434 * AU_FREQUENCY_TO_RAD_PER_S)
    assert frequency_scale(StaticPolarizability(alpha0=1.0)) == EV_TO_RAD_PER_S
    assert describe(table) == "tabulated(he)"
    assert describe(HE_STAR) == "oscillator(315.63)"
