import math
import random
from fractions import Fraction

import numpy as np
import pytest

from tools.exceptions import InvalidPlaceException, OrbitMembershipException
from tools.gmfam import GMFamily, gm_value
from tools.localfield import (
    Place,
    centralizer_element,
    conjugator_from_X,
    iwasawa,
    r_family,
    random_unipotent_perturbation,
    sigma_T,
    solve_in_N,
    u13_logdet,
    weyl_equivariance_defect,
)
from tools.orbits import standard_nilpotent
from tools.richardson import adjacency, orbit_levi
from tools.roots import LeviSubgroup, ParabolicSubgroup
from tools.utils import as_matrix, det, identity, matmul, valuation


def test_place_parsing():
    assert Place.parse("inf") == Place(kind="real")
    assert Place.parse("complex").kind == "complex"
    assert Place.parse("p5") == Place.parse("5") == Place(kind="padic", prime=5)
    assert Place.parse("p7").name == "p7"
    assert not Place.parse("3").is_archimedean


@pytest.mark.parametrize("text", ["p4", "x", "1"])
def test_invalid_places(text):
    with pytest.raises(InvalidPlaceException):
        Place.parse(text)


def test_padic_iwasawa_of_a_diagonal(p2):
    g = as_matrix([[2, 0], [0, 1]])
    result = iwasawa(g, ParabolicSubgroup.standard([1, 1]), p2)
    assert result.H.coordinates == (-1, 0)
    assert result.H.log_prime == 2
    assert sum(result.H.coordinates) == -valuation(det(g), 2)


def test_padic_iwasawa_residue_is_integral(p2):
    g = as_matrix([[1, 2], [3, 4]])
    result = iwasawa(g, ParabolicSubgroup.standard([1, 1]), p2)
    assert matmul(result.b, result.k) == g
    assert result.b[1][0] == 0
    assert all(x == 0 or valuation(x, 2) >= 0 for row in result.k for x in row)
    assert valuation(det(result.k), 2) == 0
    assert sum(result.H.coordinates) == -valuation(det(g), 2)


def test_real_iwasawa_of_a_diagonal(real):
    result = iwasawa(as_matrix([[2, 0], [0, 3]]), ParabolicSubgroup.standard([1, 1]), real)
    assert result.H.coordinates == pytest.approx((math.log(2), math.log(3)))
    assert np.allclose(result.k @ result.k.T, np.eye(2))


def test_complex_place_doubles(real):
    g = as_matrix([[2, 0], [0, 3]])
    P = ParabolicSubgroup.standard([1, 1])
    doubled = iwasawa(g, P, Place(kind="complex")).H.coordinates
    assert doubled == pytest.approx(tuple(2 * x for x in iwasawa(g, P, real).H.coordinates))


def test_iwasawa_averages_over_blocks(p3):
    result = iwasawa(as_matrix([[3, 0, 0], [0, 1, 0], [0, 0, 9]]), ParabolicSubgroup.standard([2, 1]), p3)
    assert result.H.coordinates == (Fraction(-1, 2), Fraction(-1, 2), -2)


@pytest.mark.parametrize("parts", [(2,), (2, 1), (3, 1), (2, 2)])
def test_r_family_is_orthogonal(orbit, rng, p2, parts):
    o = orbit(*parts)
    n0, _ = random_unipotent_perturbation(o, rng)
    family = r_family(n0, o, p2)
    assert family.log_prime == 2
    assert family.is_orthogonal()


@pytest.mark.parametrize("parts", [(2,), (2, 1), (3, 1)])
def test_wall_multiples_are_log_determinants(orbit, rng, parts):
    o = orbit(*parts)
    n0, y = random_unipotent_perturbation(o, rng)
    for place in (Place(kind="padic", prime=2), Place(kind="padic", prime=3)):
        family = r_family(n0, o, place)
        for P1, P2, multiple, residual in family.adjacency_multiples():
            assert residual == 0
            assert multiple == u13_logdet(y, P1, P2, o, place, n0).coefficient


def test_wall_multiple_at_the_real_place(orbit, rng, real):
    o = orbit(2, 1)
    n0, y = random_unipotent_perturbation(o, rng)
    family = r_family(n0, o, real)
    for P1, P2, multiple, _ in family.adjacency_multiples():
        assert float(multiple) == pytest.approx(u13_logdet(y, P1, P2, o, real, n0).to_float(), abs=1e-9)


@pytest.mark.parametrize("parts", [(2,), (2, 1), (3,), (3, 1), (2, 2, 1)])
def test_solve_in_N(orbit, rng, parts):
    o = orbit(*parts)
    x, _ = standard_nilpotent(o)
    for _ in range(3):
        _, y = random_unipotent_perturbation(o, rng)
        u = solve_in_N(y, o)
        assert matmul(x, u) == matmul(u, y)
        assert all(u[a][a] == 1 for a in range(len(u)))


def test_solve_in_N_rejects_points_off_the_slice(orbit):
    o = orbit(2)
    with pytest.raises(OrbitMembershipException):
        solve_in_N(as_matrix([[0, 1], [1, 0]]), o)


def test_conjugator_from_X(orbit, rng):
    o = orbit(3, 1)
    x, _ = standard_nilpotent(o)
    _, y = random_unipotent_perturbation(o, rng)
    g = conjugator_from_X(y, o)
    assert det(g) != 0
    assert matmul(x, g) == matmul(g, y)
    with pytest.raises(OrbitMembershipException):
        conjugator_from_X(y, orbit(2, 2))


def test_conjugator_from_X_rejects_non_nilpotent_matrices(orbit):
    with pytest.raises(OrbitMembershipException):
        conjugator_from_X(as_matrix([[1, 0], [0, 0]]), orbit(2))
    with pytest.raises(OrbitMembershipException):
        conjugator_from_X(identity(3))


def test_weyl_equivariance(orbit, p2):
    g = as_matrix([[2, 0, 0, 0], [1, 1, 0, 0], [3, 1, 4, 0], [1, 2, 1, 1]])
    defects = weyl_equivariance_defect(g, orbit(2, 2), p2)
    assert defects
    assert all(all(x == 0 for x in d) for d in defects)


@pytest.mark.parametrize("parts", [(2,), (2, 1)])
def test_weight_is_invariant_under_the_centralizer(orbit, rng, p2, parts):
    o = orbit(*parts)
    G = ParabolicSubgroup.standard([o.n])
    n0, _ = random_unipotent_perturbation(o, rng)
    h = centralizer_element(o, rng)
    before = gm_value(GMFamily.exponential(r_family(n0, o, p2)), orbit_levi(o), G)
    after = gm_value(GMFamily.exponential(r_family(matmul(h, n0), o, p2)), orbit_levi(o), G)
    assert after == pytest.approx(before, abs=1e-12)


def test_sigma_T(orbit, p2):
    o = orbit(2)
    assert sigma_T(identity(2), o, [5, -5], p2) == 1
    assert sigma_T(identity(2), o, [-5, 5], p2) == -1


@pytest.mark.slow
@pytest.mark.parametrize("parts", [(2,), (2, 1), (3, 1)])
def test_wall_multiples_on_200_samples(orbit, parts):
    o = orbit(*parts)
    rng = random.Random(sum(parts))
    places = [Place(kind="padic", prime=q) for q in (2, 3, 5)]
    for sample in range(200):
        n0, y = random_unipotent_perturbation(o, rng)
        place = places[sample % 3]
        family = r_family(n0, o, place)
        assert family.is_orthogonal()
        for P1, P2, multiple, residual in family.adjacency_multiples():
            assert residual == 0
            assert multiple == u13_logdet(y, P1, P2, o, place, n0).coefficient


@pytest.mark.slow
@pytest.mark.parametrize("parts", [(2,), (2, 1), (3,), (3, 1), (2, 2, 1)])
def test_solve_in_N_on_100_perturbations(orbit, parts):
    o = orbit(*parts)
    x, _ = standard_nilpotent(o)
    rng = random.Random(len(parts))
    for _ in range(100):
        _, y = random_unipotent_perturbation(o, rng)
        u = solve_in_N(y, o)
        assert matmul(x, u) == matmul(u, y)
