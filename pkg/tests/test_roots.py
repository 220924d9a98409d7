from fractions import Fraction

import pytest

from tools.exceptions import InvalidParabolicException, SingularDirectionException
from tools.roots import (
    LeviSubgroup,
    ParabolicSubgroup,
    compose,
    cone_indicator,
    coroot,
    flags_of,
    generic_direction,
    inner,
    invert,
    is_contained,
    levi_contains,
    levis_of,
    norm_quotient,
    parabolics_in,
    parabolics_of,
    project,
    root_data,
    theta,
    theta_parts,
    weyl,
    weyl_length,
    weyl_order,
)


def test_counts_for_the_torus_of_gl3():
    T = LeviSubgroup.torus(3)
    assert len(parabolics_of(T)) == 6
    assert len(flags_of(T)) == 13
    assert len(levis_of(T)) == 5


def test_levi_is_canonical():
    assert LeviSubgroup(blocks=[(2,), (0, 1)]) == LeviSubgroup.standard([2, 1])
    assert ParabolicSubgroup.standard([2, 1]).levi == LeviSubgroup.standard([2, 1])


@pytest.mark.parametrize("blocks", [[(0,), (2,)], [(0, 1), (1,)], [(), (0,)]])
def test_invalid_blocks(blocks):
    with pytest.raises(InvalidParabolicException):
        ParabolicSubgroup(ordered_blocks=blocks)


def test_containment():
    B = ParabolicSubgroup(ordered_blocks=[(0,), (1,), (2,)])
    opposite = ParabolicSubgroup(ordered_blocks=[(2,), (1,), (0,)])
    Q = ParabolicSubgroup(ordered_blocks=[(0, 1), (2,)])
    G = ParabolicSubgroup(ordered_blocks=[(0, 1, 2)])
    assert is_contained(B, Q)
    assert is_contained(B, G)
    assert not is_contained(opposite, Q)
    assert len(parabolics_in(LeviSubgroup.torus(3), Q)) == 2
    assert levi_contains(Q.levi, B.levi)
    assert not levi_contains(B.levi, Q.levi)


def test_project_averages_blocks():
    L = LeviSubgroup.standard([2, 1])
    assert project((Fraction(1), Fraction(3), Fraction(5)), L) == (2, 2, 5)


def test_coroot_and_root_data():
    assert coroot(3, (0, 1), (2,)) == (Fraction(1, 2), Fraction(1, 2), -1)
    data = root_data(ParabolicSubgroup.standard([1, 1, 1]))
    assert data.covolume_squared == 3
    for weight, cor in zip(data.weights, data.coroots):
        assert inner(weight, cor) == 1


def test_theta_for_gl2():
    B = ParabolicSubgroup.standard([1, 1])
    G = ParabolicSubgroup.standard([2])
    lam = (Fraction(1, 2), Fraction(-1, 2))
    cov_sq, factor = theta_parts(B, G, lam)
    assert cov_sq == 2
    assert factor == 1
    assert theta(B, G, lam) == pytest.approx(2**0.5)
    with pytest.raises(SingularDirectionException):
        theta_parts(B, G, (Fraction(0), Fraction(0)))


def test_weyl_action():
    w = (1, 2, 0)
    assert weyl(w, (10, 20, 30)) == (30, 10, 20)
    assert compose(w, invert(w)) == (0, 1, 2)
    assert weyl_length(w) == 2
    assert weyl(invert(w), weyl(w, (1, 2, 3))) == (1, 2, 3)


def test_norm_quotient_and_weyl_order():
    assert len(norm_quotient(LeviSubgroup.standard([2, 2]))) == 2
    assert len(norm_quotient(LeviSubgroup.standard([2, 1]))) == 1
    assert len(norm_quotient(LeviSubgroup.torus(3))) == 6
    assert weyl_order(LeviSubgroup.standard([3, 2])) == 12


@pytest.mark.parametrize("sizes", [[1, 1, 1], [2, 1, 1], [1, 2, 1, 1]])
def test_generic_direction_avoids_walls(sizes):
    L = LeviSubgroup.standard(sizes)
    G = ParabolicSubgroup.standard([sum(sizes)])
    lam = generic_direction(L, G)
    assert sum(lam) == 0
    for P in parabolics_of(L):
        _, factor = theta_parts(P, G, lam)
        assert factor != 0


def test_cone_indicator_for_gl2():
    B = ParabolicSubgroup.standard([1, 1])
    G = ParabolicSubgroup.standard([2])
    for kind in ("tau", "tau_hat"):
        assert cone_indicator(kind, B, G, (Fraction(1), Fraction(0))) == 1
        assert cone_indicator(kind, B, G, (Fraction(0), Fraction(1))) == 0
        assert cone_indicator(kind, G, G, (Fraction(0), Fraction(1))) == 1
