import math
from fractions import Fraction

import mpmath
import pytest

from tools.exceptions import DivergenceException, InvalidPlaceException, ZetaPoleException
from tools.localfield import Place
from tools.richardson import adjacent_pairs, orbit_levi
from tools.roots import LeviSubgroup
from tools.zeta import (
    ZetaBackend,
    ZetaExpr,
    ZetaSymbol,
    c_adjacent,
    c_constant,
    euler_product,
    finite_difference_defect,
    local_zeta_jet,
    log_derivative_jet,
    maj_bound,
    parse_places,
    verify_volume_identity,
    vol_levi,
    z_jet,
    z_value,
    zeta_star,
)
from tools.orbits import NilpotentOrbit, partitions


@pytest.fixture
def q2():
    return ZetaBackend(kind="padic", prime=2)


@pytest.fixture
def outside_2():
    return ZetaBackend.partial(parse_places("inf,2"))


def test_padic_values_are_exact(q2):
    assert z_value(q2, 1, 1).value == 2
    assert z_value(q2, 1, 2).value == Fraction(4, 3)
    assert z_value(q2, 2, 2).value == Fraction(8, 3)
    assert z_value(q2, 0, 5).value == 1
    assert z_value(q2, 1, 1).tail_bound == "exact"


def test_archimedean_values():
    assert z_value(ZetaBackend(kind="real"), 1, 2).to_float() == pytest.approx(1 / math.pi)
    assert z_value(ZetaBackend(kind="complex"), 1, 2).to_float() == pytest.approx(1 / (2 * math.pi))
    assert z_value(ZetaBackend.completed(), 1, 2).to_float() == pytest.approx(math.pi / 6)


def test_partial_zeta(outside_2):
    assert outside_2.S == (2,)
    assert outside_2.name == "partial[inf,2]"
    assert z_value(outside_2, 1, 2).to_float() == pytest.approx(math.pi**2 / 8)


def test_truncated_euler_product(outside_2):
    truncated = ZetaBackend.partial(parse_places("inf,2"), cutoff=1000)
    value = z_value(truncated, 1, 2)
    assert value.tail_bound != "exact"
    assert abs(value.to_float() / (math.pi**2 / 8) - 1) <= value.tail_bound
    assert euler_product(2, 100).primes == 25


def test_partial_backend_needs_the_archimedean_place():
    with pytest.raises(InvalidPlaceException):
        ZetaBackend.partial([Place(kind="padic", prime=2)])


@pytest.mark.parametrize(
    "backend, s",
    [
        (ZetaBackend(kind="padic", prime=3), 0),
        (ZetaBackend(kind="real"), -2),
        (ZetaBackend(kind="complex"), 0),
        (ZetaBackend.completed(), 1),
        (ZetaBackend(kind="partial"), 1),
    ],
)
def test_poles(backend, s):
    with pytest.raises(ZetaPoleException):
        local_zeta_jet(backend, s)


def test_zeta_star_uses_the_residue(outside_2):
    assert zeta_star(ZetaBackend.completed(), 1, 1).to_float() == pytest.approx(1.0)
    assert zeta_star(outside_2, 1, 1).to_float() == pytest.approx(0.5)
    assert zeta_star(ZetaBackend.completed(), 2, 2).to_float() == pytest.approx(math.pi / 6)
    assert zeta_star(ZetaBackend(kind="padic", prime=2), 2, 3).value == 2 * Fraction(8, 7) * Fraction(4, 3)


def test_volume_of_levis():
    assert vol_levi([2, 1]).value.to_float() == pytest.approx(math.pi / 6)
    assert vol_levi([1, 1, 1]).value.to_float() == pytest.approx(1.0)


def test_expression_normal_form():
    expr = ZetaExpr(factors=(ZetaSymbol(kind="Zstar", d=2, s=3), ZetaSymbol(kind="Z", d=1, s=3, power=-1)))
    scalar, arguments = expr.expand()
    assert scalar == 2
    assert dict(arguments) == {2: 1}


def test_c_constant(q2, orbit):
    assert c_constant(orbit(2, 1), q2).value.value == Fraction(4, 3)
    assert c_constant(orbit(3), q2).value.value == 4
    assert c_constant(orbit(2, 2), q2).value.value == Fraction(8, 3)
    assert c_constant(orbit(1, 1), q2).value.value == 1
    assert c_constant(orbit(2, 1), ZetaBackend.completed()).value.to_float() == pytest.approx(math.pi / 6)


def test_c_constant_diverges_for_non_simple_orbits(orbit):
    with pytest.raises(DivergenceException):
        c_constant(orbit(3), ZetaBackend.completed())


def test_c_adjacent(q2, orbit):
    o = orbit(2, 1)
    P1, P2 = adjacent_pairs(orbit_levi(o))[0]
    assert c_adjacent(o, P1, P2, q2).value.value == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_volume_identity(n):
    for partition in partitions(n):
        assert verify_volume_identity(NilpotentOrbit.from_partition(partition)).holds


def test_log_derivative(outside_2):
    jet = log_derivative_jet(outside_2, 1, 2, 1)
    expected = mpmath.zeta(2, 1, 1) / mpmath.zeta(2) + mpmath.log(2) / 3
    assert float(jet[0]) == pytest.approx(1.0)
    assert float(jet[1]) == pytest.approx(float(expected))


@pytest.mark.parametrize(
    "backend, d, s",
    [
        (ZetaBackend(kind="padic", prime=3), 2, 3),
        (ZetaBackend(kind="real"), 1, 3),
        (ZetaBackend(kind="complex"), 2, 4),
        (ZetaBackend.completed(), 2, 4),
    ],
)
def test_jets_match_finite_differences(backend, d, s):
    assert finite_difference_defect(backend, d, s) < 1e-6


def test_maj_bound(orbit, outside_2):
    o = orbit(2, 1)
    M = orbit_levi(o)
    assert maj_bound(o, M, outside_2) == pytest.approx(math.pi / 6)
    ratio = abs(mpmath.zeta(2, 1, 1) / mpmath.zeta(2) + mpmath.log(2) / 3)
    expected = 2 * math.sqrt(1.5) * float(ratio) * math.pi / 6
    assert maj_bound(o, LeviSubgroup.whole(3), outside_2) == pytest.approx(expected)


def test_padic_jet_in_units_of_log_q(q2):
    jet, bound = z_jet(q2, 1, 2, a=1, order=1)
    assert bound == "exact"
    assert jet[0] == Fraction(4, 3)
    assert jet[1] == Fraction(-4, 9)
