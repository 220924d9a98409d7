from fractions import Fraction

import mpmath
import pytest

from tools.jets import JetValue, exponential_of_linear, one, product


def _jet(*coefficients, log_prime=None):
    return JetValue(coefficients=tuple(Fraction(c) for c in coefficients), log_prime=log_prime)


def test_exp_and_log_are_exact_from_zero():
    e = _jet(0, 1, 0, 0).exp()
    assert e.coefficients == (1, 1, Fraction(1, 2), Fraction(1, 6))
    assert e.is_exact
    assert e.log().coefficients == (0, 1, 0, 0)


def test_reciprocal():
    assert _jet(1, 1, 0).reciprocal().coefficients == (1, -1, 1)
    with pytest.raises(ZeroDivisionError):
        _jet(0, 1).reciprocal()


def test_division_undoes_multiplication():
    a, b = _jet(2, 3, 5), _jet(1, -1, 4)
    assert ((a * b) / b).coefficients == a.coefficients


def test_product_and_one():
    jets = [exponential_of_linear(1, 3), exponential_of_linear(2, 3)]
    assert product(jets, 3).coefficients == exponential_of_linear(3, 3).coefficients
    assert product([], 2).coefficients == one(2).coefficients


def test_rescale():
    assert exponential_of_linear(1, 3).rescale(2).coefficients == exponential_of_linear(2, 3).coefficients


def test_log_prime_units_are_kept_against_constants():
    a = _jet(1, 1, log_prime=2)
    b = JetValue.constant(Fraction(3), 1)
    c = a * b
    assert c.log_prime == 2
    assert c.coefficients == (3, 3)
    assert float(c.true_coefficient(1)) == pytest.approx(3 * float(mpmath.log(2)))


def test_different_primes_fall_back_to_numbers():
    c = _jet(1, 1, log_prime=2) + _jet(1, 1, log_prime=3)
    assert c.log_prime is None
    assert float(c[1]) == pytest.approx(float(mpmath.log(6)))


def test_numeric_drops_the_scale():
    jet = _jet(1, 1, 1, log_prime=3).numeric()
    assert float(jet[2]) == pytest.approx(float(mpmath.log(3)) ** 2)


def test_orders_must_agree():
    with pytest.raises(ValueError):
        _jet(1, 2) + _jet(1, 2, 3)


def test_json():
    assert _jet(1, Fraction(1, 2)).to_json() == {"coefficients": ["1", "1/2"], "log_prime": None}
