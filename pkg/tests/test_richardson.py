import pytest

from tools.exceptions import InvalidParabolicException
from tools.orbits import NilpotentOrbit, partitions, richardson_orbit, standard_nilpotent
from tools.richardson import (
    adjacency,
    adjacent_pairs,
    chain_reversal,
    contains_refined_flag,
    dual_parabolic,
    epsilon_count,
    epsilon_set,
    epsilon_to_parabolic,
    fiber_sizes,
    in_nilradical,
    kernel_epsilon,
    kernel_parabolic,
    ls_set,
    orbit_levi,
    richardson_map,
    richardson_set,
    richardson_table,
)
from tools.roots import ParabolicSubgroup, levi_contains, norm_quotient, parabolics_of


def _orbits(n):
    return [NilpotentOrbit.from_partition(p) for p in partitions(n)]


def _check_bijection(o):
    assert len(epsilon_set(o)) == epsilon_count(o) == len(richardson_set(o))
    x, _ = standard_nilpotent(o)
    for Pt in richardson_set(o):
        assert in_nilradical(x, Pt)
        assert richardson_orbit(Pt.sizes) == o.partition


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_richardson_bijection(n):
    for o in _orbits(n):
        _check_bijection(o)


@pytest.mark.slow
@pytest.mark.parametrize("n", [6, 7])
def test_richardson_bijection_exhaustive(n):
    for o in _orbits(n):
        _check_bijection(o)


def test_epsilon_count_examples(orbit):
    assert epsilon_count(orbit(3)) == 1
    assert epsilon_count(orbit(1, 1, 1)) == 1
    assert epsilon_count(orbit(2, 1)) == 2
    assert epsilon_count(orbit(2, 2)) == 1
    assert epsilon_count(orbit(3, 1)) == 3


def _check_fibers(o):
    expected = len(norm_quotient(orbit_levi(o)))
    fibers = fiber_sizes(o)
    assert set(fibers.values()) == {expected}
    assert sum(fibers.values()) == len(parabolics_of(orbit_levi(o)))
    assert (expected == 1) == (len(fibers) == len(parabolics_of(orbit_levi(o))))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_fiber_law(n):
    for o in _orbits(n):
        _check_fibers(o)
        simple = o.inv == o.r
        assert simple == (len(norm_quotient(orbit_levi(o))) == 1)


@pytest.mark.slow
def test_fiber_law_n6():
    for o in _orbits(6):
        _check_fibers(o)


def test_kernel_flag_contains_x(orbit):
    o = orbit(3, 2)
    x, _ = standard_nilpotent(o)
    P = kernel_parabolic(o)
    assert in_nilradical(x, P)
    assert P.levi == orbit_levi(o)


def test_richardson_map_conjugates(orbit):
    o = orbit(2, 1, 1)
    for P in parabolics_of(orbit_levi(o)):
        Pt, w = richardson_map(P, o)
        assert Pt in richardson_set(o)
        assert Pt.sizes == P.sizes


def test_richardson_map_rejects_other_levis(orbit):
    with pytest.raises(InvalidParabolicException):
        richardson_map(ParabolicSubgroup.standard([1, 2]), orbit(2, 1))


@pytest.mark.parametrize("parts", [(2,), (3,), (2, 2), (2, 1), (3, 3)])
def test_refined_flag_inside_every_richardson_parabolic(orbit, parts):
    o = orbit(*parts)
    assert all(contains_refined_flag(Pt, o) for Pt in richardson_set(o))


@pytest.mark.parametrize("parts, r1, r2", [((2,), 1, 0), ((2, 1), 1, 1), ((2, 2), 2, 0)])
def test_rank_one_adjacency(orbit, parts, r1, r2):
    o = orbit(*parts)
    for P1, P2 in adjacent_pairs(orbit_levi(o)):
        data = adjacency(P1, P2, o)
        assert (data.r1, data.r2) == (r1, r2)
        assert len(data.W1) == len(data.W3) == r1
        assert len(data.W2) == r2


def test_ls_set_contains_richardson_set(orbit):
    o = orbit(2, 1)
    found = ls_set(o)
    assert all(Pt in found for Pt in richardson_set(o))
    assert ParabolicSubgroup.standard([3]) in found


def test_table_records(orbit):
    table = richardson_table(orbit(2, 1))
    assert len(table) == 2
    assert all(record["x_in_nilradical"] for record in table)
    assert all(sorted(record["w"]) == [1, 2, 3] for record in table)


@pytest.mark.parametrize("parts", [(2, 1), (3, 1), (2, 2, 1)])
def test_epsilon_to_parabolic_is_injective(orbit, parts):
    o = orbit(*parts)
    _, layout = standard_nilpotent(o)
    flags = {epsilon_to_parabolic(eps, layout) for eps in epsilon_set(o)}
    assert len(flags) == epsilon_count(o)
    assert all(len(P.ordered_blocks) == o.r for P in flags)
    assert epsilon_to_parabolic(kernel_epsilon(o), layout) == kernel_parabolic(o)


def test_epsilon_to_parabolic_checks_rows(orbit):
    _, layout = standard_nilpotent(orbit(3))
    with pytest.raises(InvalidParabolicException):
        epsilon_to_parabolic(kernel_epsilon(orbit(2)), layout)


@pytest.mark.parametrize("parts", [(2, 1), (3, 1), (2, 2), (3, 2, 1)])
def test_chain_reversal_transposes_x(orbit, parts):
    o = orbit(*parts)
    x, _ = standard_nilpotent(o)
    J = chain_reversal(o)
    assert sorted(J) == list(range(o.n))
    assert all(x[J[a]][J[b]] == x[b][a] for a in range(o.n) for b in range(o.n))


@pytest.mark.parametrize("parts", [(3, 1), (3, 2, 1), (4, 2)])
def test_dual_parabolic_permutes_the_richardson_set(orbit, parts):
    o = orbit(*parts)
    x, _ = standard_nilpotent(o)
    found = richardson_set(o)
    duals = [dual_parabolic(P, o) for P in found]
    assert set(duals) == set(found)
    assert all(dual_parabolic(D, o) == P for P, D in zip(found, duals))
    assert all(in_nilradical(x, D) for D in duals)


def test_dual_flag_covers_the_three_part_orbit(orbit):
    o = orbit(3, 2, 1)
    assert all(contains_refined_flag(P, o) or contains_refined_flag(dual_parabolic(P, o), o) for P in richardson_set(o))
    assert not all(contains_refined_flag(P, o) for P in richardson_set(o))
