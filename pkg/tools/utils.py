from fractions import Fraction
from typing import Iterable, List, Sequence

import sympy

from tools.exceptions import SingularMatrixException

Matrix = List[List[Fraction]]


def to_fraction(value) -> Fraction:
    """
    Converts ints, strings "a/b", Fractions and sympy rationals to a Fraction.

    Args:
        value: The scalar to convert

    Returns:
        The exact rational value
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, float):
        raise TypeError("Floats are not accepted as exact rationals")
    return Fraction(value)


def as_matrix(rows: Iterable[Iterable]) -> Matrix:
    return [[to_fraction(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(n: int, m: int = None) -> Matrix:
    m = n if m is None else m
    return [[Fraction(0)] * m for _ in range(n)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum((row[t] * b[t][j] for t in range(inner)), Fraction(0)) for j in range(cols)] for row in a]


def matadd(a: Matrix, b: Matrix, scale=1) -> Matrix:
    return [[x + scale * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def transpose_matrix(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def to_sympy(a: Matrix) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in map(to_fraction, row)] for row in a])


def from_sympy(m: sympy.Matrix) -> Matrix:
    return [[to_fraction(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]


def rank(a: Matrix) -> int:
    if not a or not a[0]:
        return 0
    return int(to_sympy(a).rank())


def det(a: Matrix) -> Fraction:
    if not a:
        return Fraction(1)
    return to_fraction(to_sympy(a).det(method="bareiss"))


def inverse(a: Matrix) -> Matrix:
    """
    Exact inverse over the rationals.

    Raises:
        SingularMatrixException: when `a` is not invertible
    """
    if not a:
        return []
    m = to_sympy(a)
    if m.det(method="bareiss") == 0:
        raise SingularMatrixException()
    return from_sympy(m.inv())


def nullspace(a: Matrix) -> List[List[Fraction]]:
    """Basis of the right kernel of `a`, through sympy's exact row reduction."""
    basis = to_sympy(a).nullspace()
    return [[to_fraction(x) for x in vec] for vec in basis]


def matrix_power(a: Matrix, k: int) -> Matrix:
    result = identity(len(a))
    for _ in range(k):
        result = matmul(result, a)
    return result


def permutation_matrix(w: Sequence[int]) -> Matrix:
    """Matrix sending the basis vector e_a to e_{w[a]}."""
    n = len(w)
    m = zeros(n)
    for a, b in enumerate(w):
        m[b][a] = Fraction(1)
    return m


def valuation(x: Fraction, p: int) -> int:
    """
    p-adic valuation of a nonzero rational.

    Args:
        x: The rational number
        p: The prime

    Returns:
        v_p(x)
    """
    x = to_fraction(x)
    if x == 0:
        raise ValueError("The valuation of 0 is infinite")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def prime_support(values: Iterable[Fraction]) -> List[int]:
    """Primes dividing a numerator or a denominator of the given rationals."""
    primes = set()
    for x in values:
        x = to_fraction(x)
        if x == 0:
            continue
        for part in (abs(x.numerator), x.denominator):
            if part > 1:
                primes.update(int(p) for p in sympy.factorint(part))
    return sorted(primes)


def parse_matrix(text: str) -> Matrix:
    """
    Parses the matrix text format: rows separated by ";", entries by "," or whitespace.

    Args:
        text: For instance "1/2, 0; 0, 3"

    Returns:
        The exact matrix
    """
    rows = [r for r in text.strip().split(";") if r.strip()]
    matrix = [[Fraction(tok) for tok in row.replace(",", " ").split()] for row in rows]
    if not matrix or any(len(row) != len(matrix) for row in matrix):
        raise ValueError(f"Matrix text {text!r} does not describe a square matrix")
    return matrix


def format_fraction(x: Fraction) -> str:
    x = to_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def format_matrix(a: Matrix) -> List[List[str]]:
    return [[format_fraction(x) for x in row] for row in a]
