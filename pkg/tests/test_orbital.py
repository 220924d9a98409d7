import math
from fractions import Fraction

import mpmath
import pytest

from tools.exceptions import DivergenceException, InvalidParabolicException, UnsupportedOrbitException
from tools.localfield import Place, random_unipotent_perturbation
from tools.orbital import (
    UnitFunctionSpec,
    arthur_j,
    arthur_j_conjugates,
    coefficient_a,
    descent_check,
    development,
    euler_cross_check,
    euler_lattice_value,
    global_weighted_T,
    j_numeric_padic,
    j_rectangular,
    levi_factorisation,
    levi_sizes_in,
    rank_one_value,
    rectangular_orbit,
    reference_levis,
    sublattice_counts,
    weight_at_point,
)
from tools.orbits import standard_nilpotent
from tools.richardson import orbit_levi
from tools.roots import LeviSubgroup, ParabolicSubgroup
from tools.zeta import ZetaBackend, parse_places


def _gl2_value(q):
    return -math.sqrt(2) * math.log(q) / (q - 1)


def _padic(q):
    return ZetaBackend(kind="padic", prime=q)


@pytest.fixture
def outside_2():
    return parse_places("inf,2")


def _a_G_outside_2():
    ratio = mpmath.zeta(2, 1, 1) / mpmath.zeta(2) + mpmath.log(2) / 3
    return float(mpmath.pi / 6 * mpmath.sqrt(mpmath.mpf(3) / 2) * ratio)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_gl2_closed_form(q):
    value = j_rectangular(2, 1, None, _padic(q))
    assert value.to_float() == pytest.approx(_gl2_value(q), rel=1e-12)
    assert value.exact is not None
    assert value.tail_bound == "exact"
    assert rank_one_value([1, 1], _padic(q)).to_float() == pytest.approx(_gl2_value(q), rel=1e-12)


def test_rectangular_values_at_the_whole_group_are_one():
    assert j_rectangular(3, 2, LeviSubgroup.whole(6), _padic(2)).to_float() == pytest.approx(1.0)


def test_rectangular_levi_must_contain_m():
    with pytest.raises(InvalidParabolicException):
        j_rectangular(2, 2, LeviSubgroup.torus(4), _padic(2))


def test_rectangular_real_place():
    value = j_rectangular(2, 1, None, ZetaBackend(kind="real"))
    # log-derivative of pi^{-s/2} Gamma(s/2) at s = 1
    expected = math.sqrt(2) * float(-mpmath.log(mpmath.pi) / 2 + mpmath.digamma(0.5) / 2)
    assert value.to_float() == pytest.approx(expected, rel=1e-10)
    assert value.to_float() == pytest.approx(rank_one_value([1, 1], ZetaBackend(kind="real")).to_float())


def test_sublattice_counts():
    assert sublattice_counts(2, 1, 4) == [1, 1, 1, 1, 1]
    assert sublattice_counts(2, 2, 2) == [1, 3, 7]
    assert sublattice_counts(3, 2, 1) == [1, 4]


def test_lattice_sum_agrees_with_the_closed_form(orbit):
    o = orbit(2)
    estimate = j_numeric_padic(o, None, None, 2, depth=8)
    exact = _gl2_value(2)
    assert abs(float(estimate.value) - exact) <= estimate.tail_bound + 1e-2 * abs(exact)
    assert float(estimate.unweighted) == pytest.approx(1.0, abs=1e-9)
    assert estimate.strata > 0


def test_unweighted_lattice_sum_is_normalized(orbit):
    o = orbit(2, 1)
    M = orbit_levi(o)
    estimate = j_numeric_padic(o, M, ParabolicSubgroup(ordered_blocks=M.blocks), 3, depth=6)
    assert float(estimate.value) == pytest.approx(1.0, abs=1e-3)


def test_lattice_sum_needs_the_refined_flag(orbit):
    with pytest.raises(UnsupportedOrbitException):
        j_numeric_padic(orbit(4, 2), None, None, 2, depth=1)


@pytest.mark.parametrize("q, depth", [(2, 8), (3, 6)])
def test_lattice_sum_of_22_through_the_dual_flag(orbit, q, depth):
    estimate = j_numeric_padic(orbit(2, 2), None, None, q, depth=depth)
    exact = j_rectangular(2, 2, None, _padic(q)).to_float()
    assert exact == pytest.approx(-(q + 2) * math.log(q) / (q ** 2 - 1))
    assert abs(float(estimate.value) - exact) <= estimate.tail_bound + 1e-2 * abs(exact)


@pytest.mark.parametrize(
    "Q",
    [ParabolicSubgroup.standard([3, 1]), ParabolicSubgroup(ordered_blocks=[(3,), (0, 1, 2)])],
)
def test_descent_of_31(orbit, p2, p3, Q):
    o = orbit(3, 1)
    for place in (p2, p3):
        check = descent_check(o, LeviSubgroup.standard([3, 1]), Q, place, depth=6)
        assert check.passed, check.to_json()


def test_unit_function_spec(outside_2):
    assert UnitFunctionSpec.at(Place.parse("p3")).backend() == _padic(3)
    assert UnitFunctionSpec.outside_of(outside_2).backend().S == (2,)
    with pytest.raises(UnsupportedOrbitException):
        UnitFunctionSpec(places=tuple(outside_2)).backend()


def test_arthur_j(orbit):
    o = orbit(2, 2)
    f = UnitFunctionSpec.at(Place.parse("p2"))
    assert arthur_j(o, LeviSubgroup.whole(4), f).value == 1
    value = arthur_j(o, orbit_levi(o), f)
    assert value.method == "zeta-ratio family"
    conjugates = arthur_j_conjugates(o, orbit_levi(o), f)
    assert len(conjugates) == 2
    assert all(v.to_float() == pytest.approx(value.to_float()) for v in conjugates.values())


def test_arthur_j_without_a_path(orbit):
    with pytest.raises(UnsupportedOrbitException):
        arthur_j(orbit(2, 1), orbit_levi(orbit(2, 1)), UnitFunctionSpec.at(Place(kind="real")))


def test_levi_factorisation():
    M = LeviSubgroup.standard([1, 1, 2])
    L = LeviSubgroup.standard([2, 2])
    assert levi_sizes_in(M, L) == [[1, 1], [2]]
    value = levi_factorisation(M, L, _padic(2))
    assert value.to_float() == pytest.approx(_gl2_value(2))
    assert value.exact is not None


def test_levi_factorisation_through_an_intermediate_levi():
    # the two Levis meeting [5, 1] transversally inside G, with d^2 = 9/10 and 4/5
    M, L = LeviSubgroup.standard([3, 2, 1]), LeviSubgroup.standard([5, 1])
    G = LeviSubgroup.whole(6)
    value = levi_factorisation(M, G, _padic(2), base=L)
    expected = math.sqrt(0.9) * rank_one_value([3, 1], _padic(2)).to_float() + math.sqrt(0.8) * rank_one_value(
        [2, 1], _padic(2)
    ).to_float()
    assert value.to_float() == pytest.approx(expected, rel=1e-12)
    assert value.method.startswith("descent")
    assert levi_factorisation(M, L, _padic(2), base=L).to_float() == pytest.approx(1.0)


def test_descent_of_a_rectangular_orbit(orbit, p2):
    o = orbit(2)
    check = descent_check(o, LeviSubgroup.whole(2), ParabolicSubgroup.standard([2]), p2)
    assert check.passed
    assert check.residual == pytest.approx(0.0, abs=1e-12)


def test_descent_through_the_lattice_sum(orbit, p2):
    o = orbit(2, 1)
    check = descent_check(o, LeviSubgroup.whole(3), ParabolicSubgroup.standard([3]), p2, depth=8)
    assert check.full_group.method == "lattice sum"
    assert check.passed, check.to_json()


def test_descent_rejects_foreign_parabolics(orbit, p2):
    with pytest.raises(InvalidParabolicException):
        descent_check(orbit(2), LeviSubgroup.whole(2), ParabolicSubgroup.standard([1, 1]), p2)


def test_weight_vanishes_at_the_standard_representative(orbit, p2):
    x, _ = standard_nilpotent(orbit(2, 1))
    assert weight_at_point(x, places=[p2]).to_float() == pytest.approx(0.0, abs=1e-15)


def test_weight_summed_over_places(orbit, rng, p2, p3):
    o = orbit(2, 1)
    n0, y = random_unipotent_perturbation(o, rng)
    separate = [weight_at_point(y, places=[v], g=n0) for v in (p2, p3)]
    combined = weight_at_point(y, places=[p2, p3], g=n0)
    assert combined.backend == "p2,p3"
    assert all(v.exact is not None for v in separate)
    assert math.isfinite(combined.to_float())


def test_reference_levis():
    M = LeviSubgroup.standard([2, 1])
    assert len(reference_levis(M, LeviSubgroup.whole(3))) == 3
    assert reference_levis(M, M) == [M]


def test_coefficients_outside_2(orbit, outside_2):
    o = orbit(2, 1)
    M = orbit_levi(o)
    a_M = coefficient_a(o, M, outside_2)
    assert a_M.value == pytest.approx(math.pi / 6)
    assert a_M.bound == pytest.approx(math.pi / 6)
    a_G = coefficient_a(o, LeviSubgroup.whole(3), outside_2, cutoff=2000)
    assert a_G.value == pytest.approx(_a_G_outside_2(), rel=1e-10)
    assert a_G.reference_spread == pytest.approx(0.0, abs=1e-12)
    assert abs(a_G.value) <= a_G.bound
    euler = a_G.euler_check
    assert abs(euler["value"] - a_G.integral.to_float()) <= euler["tail_bound"]
    assert (euler["r1"], euler["r2"]) == (1, 1)


def test_euler_check_only_for_rank_one_factors():
    M = LeviSubgroup.torus(3)
    assert euler_cross_check(M, LeviSubgroup.whole(3), parse_places("inf"), 100) is None


def test_coefficient_through_the_euler_product_of_lattice_sums(orbit, outside_2):
    o = orbit(3, 2, 1)
    a = coefficient_a(o, LeviSubgroup.whole(6), outside_2)
    assert a.reason is None
    assert a.value is not None and math.isfinite(a.value)
    assert "euler" in a.integral.method
    assert 0 <= a.integral.tail_bound < math.inf
    assert a.reference_spread == pytest.approx(0.0, abs=1e-9)


def test_euler_product_of_lattice_sums_in_rank_one(orbit):
    o = orbit(2, 1)
    backend = ZetaBackend.partial(parse_places("inf"), cutoff=30)
    value = euler_lattice_value(o, orbit_levi(o), backend, depth=6)
    expected = rank_one_value([2, 1], backend).to_float()
    assert value.method.startswith("euler product of lattice sums, 10 primes")
    assert abs(value.to_float() - expected) <= value.tail_bound + 1e-3 * abs(expected)


def test_euler_product_needs_a_partial_backend(orbit):
    o = orbit(2, 1)
    with pytest.raises(UnsupportedOrbitException):
        euler_lattice_value(o, orbit_levi(o), _padic(2))


def test_coefficients_diverge_for_non_simple_orbits(orbit, outside_2):
    with pytest.raises(DivergenceException):
        coefficient_a(orbit(2), LeviSubgroup.whole(2), outside_2)
    with pytest.raises(DivergenceException):
        development(orbit(2, 2), outside_2)


def test_development_of_21(orbit, outside_2):
    terms = development(orbit(2, 1), outside_2)
    assert len(terms) == 2
    by_factor = {term.weyl_factor: term for term in terms}
    assert set(by_factor) == {Fraction(1), Fraction(1, 3)}
    assert all(term.induces_ambient for term in terms)
    assert by_factor[Fraction(1, 3)].coefficient.value == pytest.approx(math.pi / 6)
    assert by_factor[Fraction(1)].coefficient.value == pytest.approx(_a_G_outside_2(), rel=1e-10)
    assert by_factor[Fraction(1, 3)].orbit == ["(1,1)", "(1)"]


def test_global_weighted_T(orbit):
    o = orbit(2, 1)
    result = global_weighted_T(o, [Fraction(3), Fraction(1), Fraction(-4)])
    assert result.degree == 1
    assert result.volume == pytest.approx(math.pi / 6)
    assert len(result.terms) == 2
    assert result.value is not None and math.isfinite(result.value)
    with pytest.raises(DivergenceException):
        global_weighted_T(orbit(2), [1, -1])
    at_q = global_weighted_T(o, [1, 0, -1], Q=ParabolicSubgroup.standard([2, 1]))
    assert at_q.value == pytest.approx(at_q.volume)
    assert at_q.degree == 0
    with pytest.raises(InvalidParabolicException):
        global_weighted_T(o, [1, 0, -1], Q=ParabolicSubgroup.standard([1, 2]))


def test_global_weighted_T_between_m_and_g(orbit):
    o = orbit(3, 2, 1)
    M = orbit_levi(o)
    Q = ParabolicSubgroup.standard([5, 1])
    at_zero = global_weighted_T(o, [0] * 6, Q=Q)
    expected = at_zero.volume * levi_factorisation(M, Q.levi, ZetaBackend.completed()).to_float()
    assert at_zero.value == pytest.approx(expected, rel=1e-9)
    assert len(at_zero.terms) == 2
    moved = global_weighted_T(o, [5, 3, 1, -2, -3, -4], Q=Q)
    assert moved.degree == 1
    through_l = global_weighted_T(o, [5, 3, 1, -2, -3, -4], L=LeviSubgroup.standard([5, 1]))
    assert through_l.value is not None
    assert through_l.degree == 1
    assert not any("reason" in term for term in through_l.terms)
    flat = global_weighted_T(o, [0] * 6, L=LeviSubgroup.standard([5, 1]))
    through_g = levi_factorisation(M, LeviSubgroup.whole(6), ZetaBackend.completed(), base=LeviSubgroup.standard([5, 1]))
    assert flat.value == pytest.approx(flat.volume * through_g.to_float(), rel=1e-9)


def test_rectangular_orbit():
    assert rectangular_orbit(3, 2).partition.parts == (3, 3)
