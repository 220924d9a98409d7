import logging
from fractions import Fraction
from math import factorial
from typing import Any, Optional, Sequence, Tuple

import mpmath
from pydantic import BaseModel, ConfigDict

logger = logging.getLogger(__name__)


def to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def is_rational(x) -> bool:
    return isinstance(x, (int, Fraction))


class JetValue(BaseModel):
    """
    Truncated Taylor expansion a_0 + a_1 t + ... + a_k t^k of a function of one real parameter.

    Coefficients are exact rationals or mpmath numbers. When `log_prime` is set the true i-th
    coefficient is a_i * (log log_prime)^i, which keeps p-adic families exact.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: Tuple[Any, ...]
    log_prime: Optional[int] = None

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, i: int):
        return self.coefficients[i]

    @classmethod
    def constant(cls, c, order: int, log_prime: Optional[int] = None) -> "JetValue":
        return cls(coefficients=(c,) + (Fraction(0),) * order, log_prime=log_prime)

    @property
    def is_constant(self) -> bool:
        return all(c == 0 for c in self.coefficients[1:])

    @property
    def zero(self):
        return Fraction(0) if self.is_exact else mpmath.mpf(0)

    @property
    def is_exact(self) -> bool:
        return all(is_rational(c) for c in self.coefficients)

    def inexact(self) -> "JetValue":
        """Same units, coefficients converted to mpmath numbers."""
        return JetValue(coefficients=tuple(to_mpf(c) for c in self.coefficients), log_prime=self.log_prime)

    def numeric(self) -> "JetValue":
        """Drops the log-q scale: multiplies the i-th coefficient by (log q)^i."""
        factor = mpmath.log(self.log_prime) if self.log_prime else mpmath.mpf(1)
        return JetValue(coefficients=tuple(to_mpf(c) * factor**i for i, c in enumerate(self.coefficients)))

    def true_coefficient(self, i: int):
        if self.log_prime is None:
            return self.coefficients[i]
        return to_mpf(self.coefficients[i]) * mpmath.log(self.log_prime) ** i

    def _align(self, other: "JetValue") -> Tuple["JetValue", "JetValue", Optional[int]]:
        if self.order != other.order:
            raise ValueError("Jets of different orders cannot be combined")
        a, b = self, other
        if a.log_prime == b.log_prime:
            prime = a.log_prime
        elif b.log_prime is None and b.is_constant:
            prime = a.log_prime
        elif a.log_prime is None and a.is_constant:
            prime = b.log_prime
        else:
            a, b, prime = a.numeric(), b.numeric(), None
        if a.is_exact != b.is_exact:
            a, b = a.inexact(), b.inexact()
        return a, b, prime

    def __add__(self, other: "JetValue") -> "JetValue":
        a, b, prime = self._align(other)
        return JetValue(coefficients=tuple(x + y for x, y in zip(a.coefficients, b.coefficients)), log_prime=prime)

    def __sub__(self, other: "JetValue") -> "JetValue":
        return self + other.scale(-1)

    def __mul__(self, other: "JetValue") -> "JetValue":
        a, b, prime = self._align(other)
        coefficients = tuple(
            sum((a[i] * b[m - i] for i in range(m + 1)), a.zero) for m in range(a.order + 1)
        )
        return JetValue(coefficients=coefficients, log_prime=prime)

    def __truediv__(self, other: "JetValue") -> "JetValue":
        return self * other.reciprocal()

    def scale(self, c) -> "JetValue":
        exact = is_rational(c) and self.is_exact
        base = self if exact else self.inexact()
        c = c if exact else to_mpf(c)
        return JetValue(coefficients=tuple(c * x for x in base.coefficients), log_prime=self.log_prime)

    def rescale(self, factor) -> "JetValue":
        """The jet of t -> f(factor * t)."""
        exact = is_rational(factor) and self.is_exact
        base = self if exact else self.inexact()
        factor = factor if exact else to_mpf(factor)
        return JetValue(coefficients=tuple(c * factor**i for i, c in enumerate(base.coefficients)), log_prime=self.log_prime)

    def reciprocal(self) -> "JetValue":
        base = self if self.is_exact else self.inexact()
        a = base.coefficients
        if a[0] == 0:
            raise ZeroDivisionError("Reciprocal of a jet with vanishing constant term")
        b = [Fraction(1) / a[0] if is_rational(a[0]) else 1 / a[0]]
        for m in range(1, len(a)):
            b.append(-sum((a[i] * b[m - i] for i in range(1, m + 1)), base.zero) / a[0])
        return JetValue(coefficients=tuple(b), log_prime=self.log_prime)

    def exp(self) -> "JetValue":
        base = self if self[0] == 0 and self.is_exact else self.inexact()
        a = base.coefficients
        b = [base.zero + 1 if a[0] == 0 else mpmath.exp(a[0])]
        for m in range(1, len(a)):
            b.append(sum((i * a[i] * b[m - i] for i in range(1, m + 1)), base.zero) / m)
        return JetValue(coefficients=tuple(b), log_prime=self.log_prime)

    def log(self) -> "JetValue":
        if self[0] == 0:
            raise ZeroDivisionError("Logarithm of a jet with vanishing constant term")
        base = self if self[0] == 1 and self.is_exact else self.inexact()
        a = base.coefficients
        c = [base.zero if a[0] == 1 else mpmath.log(a[0])]
        for m in range(1, len(a)):
            acc = sum((i * c[i] * a[m - i] for i in range(1, m)), base.zero)
            c.append((a[m] - acc / m) / a[0])
        return JetValue(coefficients=tuple(c), log_prime=self.log_prime)

    def to_json(self) -> dict:
        return {
            "coefficients": [str(c) if is_rational(c) else float(c) for c in self.coefficients],
            "log_prime": self.log_prime,
        }


def one(order: int) -> JetValue:
    return JetValue.constant(Fraction(1), order)


def product(jets: Sequence[JetValue], order: int) -> JetValue:
    result = one(order)
    for jet in jets:
        result = result * jet
    return result


def exponential_of_linear(slope, order: int, log_prime: Optional[int] = None) -> JetValue:
    """Jet of t -> exp(slope * t): coefficients slope^i / i!."""
    if is_rational(slope):
        coefficients = tuple(Fraction(slope) ** i / factorial(i) for i in range(order + 1))
    else:
        coefficients = tuple(mpmath.mpf(slope) ** i / factorial(i) for i in range(order + 1))
    return JetValue(coefficients=coefficients, log_prime=log_prime)
