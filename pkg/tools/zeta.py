import logging
from collections import Counter
from fractions import Fraction
from math import factorial
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import mpmath
import sympy
from pydantic import BaseModel, ConfigDict

from tools.constant import DEFAULT_PRIME_CUTOFF, EXACT_TAG, FINITE_DIFFERENCE_STEP, MPMATH_DIGITS, REAL_PLACE
from tools.exceptions import DivergenceException, InvalidPlaceException, ZetaPoleException
from tools.jets import JetValue, exponential_of_linear, is_rational, one, to_mpf
from tools.localfield import Place
from tools.orbits import NilpotentOrbit, is_simple, levi_sizes
from tools.richardson import adjacency, adjacent_pairs, orbit_levi
from tools.roots import coroot_norm_squared, dim_a, is_contained, parabolics_in, parabolics_of

logger = logging.getLogger(__name__)

mpmath.mp.dps = MPMATH_DIGITS


class ZetaBackend(BaseModel):
    """
    Where Z(s) lives: one place of Q, the completed global zeta function, or its partial product
    outside a finite set S of places (S contains the archimedean place).
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["padic", "real", "complex", "global", "partial"]
    prime: Optional[int] = None
    S: Tuple[int, ...] = ()  # finite primes removed by the partial backend
    cutoff: Optional[int] = None  # truncate the partial Euler product at this prime bound

    @classmethod
    def local(cls, place: Place) -> "ZetaBackend":
        return cls(kind=place.kind, prime=place.prime)

    @classmethod
    def completed(cls) -> "ZetaBackend":
        return cls(kind="global")

    @classmethod
    def partial(cls, places: Sequence[Place], cutoff: Optional[int] = None) -> "ZetaBackend":
        if not any(v.kind == "real" for v in places):
            raise InvalidPlaceException([v.name for v in places], "S must contain the archimedean place")
        primes = tuple(sorted({v.prime for v in places if v.kind == "padic"}))
        return cls(kind="partial", S=primes, cutoff=cutoff)

    @property
    def is_local(self) -> bool:
        return self.kind in ("padic", "real", "complex")

    @property
    def name(self) -> str:
        if self.kind == "padic":
            return f"p{self.prime}"
        if self.kind == "real":
            return REAL_PLACE
        if self.kind in ("complex", "global"):
            return self.kind
        places = ",".join([REAL_PLACE] + [str(p) for p in self.S])
        suffix = f"@{self.cutoff}" if self.cutoff else ""
        return f"partial[{places}]{suffix}"


def parse_places(text: str) -> List[Place]:
    """Comma separated places, e.g. "inf,2,3"."""
    return [Place.parse(token) for token in str(text).split(",") if token.strip()]


class ZetaValue(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: object  # Fraction at a p-adic place, mpf otherwise
    backend: str
    tail_bound: object = EXACT_TAG  # EXACT_TAG or a float bound on the relative error

    def to_float(self) -> float:
        return float(self.value)

    def to_json(self) -> Dict:
        out = {"value": float(self.value), "backend": self.backend, "tail_bound": self.tail_bound}
        if is_rational(self.value):
            out["exact"] = str(self.value)
        return out


def _check_pole(backend: ZetaBackend, s) -> None:
    if not is_rational(s):
        return
    if backend.kind == "padic" and s == 0:
        raise ZetaPoleException(backend.name, s)
    if backend.kind == "real" and s <= 0 and Fraction(s) / 2 == int(Fraction(s) / 2):
        raise ZetaPoleException(backend.name, s)
    if backend.kind == "complex" and s <= 0 and Fraction(s) == int(Fraction(s)):
        raise ZetaPoleException(backend.name, s)
    if backend.kind == "global" and s in (0, 1):
        raise ZetaPoleException(backend.name, s)
    if backend.kind == "partial" and s <= 1:
        raise ZetaPoleException(backend.name, s)


def _padic_jet(q: int, s, a, order: int) -> JetValue:
    """Jet of t -> 1/(1 - q^{-(s + a t)}) in units of t log q."""
    if is_rational(s) and Fraction(s).denominator == 1:
        base = Fraction(q) ** (-int(s))
    else:
        base = mpmath.power(q, -to_mpf(s))
    decay = exponential_of_linear(-Fraction(a) if is_rational(a) else -to_mpf(a), order, q)
    return (JetValue.constant(Fraction(1), order, q) - decay.scale(base)).reciprocal()


def _log_gamma_jet(x0, slope, order: int) -> JetValue:
    """Jet of t -> log Gamma(x0 + slope t)."""
    coefficients = [mpmath.loggamma(x0)]
    for m in range(1, order + 1):
        coefficients.append(mpmath.polygamma(m - 1, x0) * mpmath.mpf(slope) ** m / factorial(m))
    return JetValue(coefficients=tuple(coefficients))


def _archimedean_jet(kind: str, s, a, order: int) -> JetValue:
    s, a = to_mpf(s), to_mpf(a)
    if kind == "real":
        # log Z(s) = -(s/2) log pi + log Gamma(s/2)
        log_jet = _log_gamma_jet(s / 2, a / 2, order)
        linear = [-(s / 2) * mpmath.log(mpmath.pi), -(a / 2) * mpmath.log(mpmath.pi)]
    else:
        # log Z(s) = (1 - s) log 2 pi + log Gamma(s)
        log_jet = _log_gamma_jet(s, a, order)
        linear = [(1 - s) * mpmath.log(2 * mpmath.pi), -a * mpmath.log(2 * mpmath.pi)]
    linear = (linear + [mpmath.mpf(0)] * order)[: order + 1]
    return (log_jet + JetValue(coefficients=tuple(linear))).exp()


def _riemann_jet(s, a, order: int) -> JetValue:
    s, a = to_mpf(s), to_mpf(a)
    return JetValue(
        coefficients=tuple(mpmath.zeta(s, 1, derivative=m) * a**m / factorial(m) for m in range(order + 1))
    )


class EulerProduct(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    jet: JetValue
    cutoff: int
    primes: int
    tail_bound: float


def euler_product(s, cutoff: int = DEFAULT_PRIME_CUTOFF, S: Sequence[int] = (), a=0, order: int = 0) -> EulerProduct:
    """
    Truncated Euler product of the partial zeta function, prod over primes p < cutoff outside S of
    1/(1 - p^{-s}), as a jet along s + a t.

    The relative error of the i-th log-coefficient is at most 2 (log C)^i C^{1-s}/(s-1) |a|^i / i!; the
    reported tail bound is exp of their sum minus one.
    """
    if s <= 1:
        raise ZetaPoleException(f"partial@{cutoff}", s)
    log_jet = JetValue(coefficients=(mpmath.mpf(0),) * (order + 1))
    count = 0
    for p in sympy.primerange(2, cutoff):
        if p in S:
            continue
        log_jet = log_jet + _padic_jet(int(p), s, a, order).numeric().log()
        count += 1
    s_m, c_m = to_mpf(s), mpmath.mpf(cutoff)
    tail = sum(
        2 * mpmath.log(c_m) ** i * c_m ** (1 - s_m) / (s_m - 1) * abs(to_mpf(a)) ** i / factorial(i)
        for i in range(order + 1)
    )
    bound = float(mpmath.exp(tail) - 1)
    logger.info("Euler product at s=%s: cutoff=%d primes=%d tail bound=%.3e", s, cutoff, count, bound)
    return EulerProduct(jet=log_jet.exp(), cutoff=cutoff, primes=count, tail_bound=bound)


def local_zeta_jet(backend: ZetaBackend, s, a=0, order: int = 0) -> Tuple[JetValue, object]:
    """
    Jet of t -> Z(s + a t) for the single zeta factor Z of the backend.

    Returns:
        (jet, tail bound or EXACT_TAG)
    """
    _check_pole(backend, s)
    if backend.kind == "padic":
        return _padic_jet(backend.prime, s, a, order), EXACT_TAG
    if backend.kind in ("real", "complex"):
        return _archimedean_jet(backend.kind, s, a, order), EXACT_TAG
    if backend.kind == "global":
        return _archimedean_jet("real", s, a, order) * _riemann_jet(s, a, order), EXACT_TAG
    if backend.cutoff:
        product = euler_product(s, backend.cutoff, backend.S, a, order)
        return product.jet, product.tail_bound
    jet = _riemann_jet(s, a, order)
    for p in backend.S:
        jet = jet * _padic_jet(p, s, a, order).reciprocal().numeric()
    return jet, EXACT_TAG


def _combine_bounds(bounds: Sequence) -> object:
    numeric = [b for b in bounds if b != EXACT_TAG]
    if not numeric:
        return EXACT_TAG
    total = 1.0
    for b in numeric:
        total *= 1.0 + float(b)
    return total - 1.0


def z_jet(backend: ZetaBackend, d: int, s, a=0, order: int = 0) -> Tuple[JetValue, object]:
    """
    Jet of t -> Z_d(s + a t) = Z(s + a t) Z(s - 1 + a t) ... Z(s - d + 1 + a t); Z_0 is 1.

    Raises:
        ZetaPoleException: when a factor has a pole at t = 0
    """
    jet, bounds = one(order), []
    for i in range(d):
        factor, bound = local_zeta_jet(backend, s - i, a, order)
        jet = jet * factor
        bounds.append(bound)
    return jet, _combine_bounds(bounds)


def z_value(backend: ZetaBackend, d: int, s) -> ZetaValue:
    jet, bound = z_jet(backend, d, s)
    return ZetaValue(value=jet[0], backend=backend.name, tail_bound=bound)


def log_derivative_jet(backend: ZetaBackend, d: int, s, order: int) -> JetValue:
    """Jet of t -> Z_d(s + t) / Z_d(s); its i-th coefficient is Z_d^{(i)}(s) / (i! Z_d(s))."""
    jet, _ = z_jet(backend, d, s, 1, order)
    return jet.scale(Fraction(1) / jet[0] if is_rational(jet[0]) else 1 / jet[0])


def _residue(backend: ZetaBackend):
    """Residue at s = 1 of the single factor Z of a global or partial backend."""
    if backend.kind == "global":
        return mpmath.mpf(1)
    residue = mpmath.mpf(1)
    for p in backend.S:
        residue *= 1 - mpmath.mpf(1) / p
    return residue


def zeta_star(backend: ZetaBackend, n: int, s) -> ZetaValue:
    """
    Z*_n(s) = (s - n + 1) Z_n(s); at the pole s = n of a global or partial backend the factor
    (s - n + 1) Z(s - n + 1) is replaced by the residue of Z at 1.
    """
    if n == 0:
        return ZetaValue(value=Fraction(1), backend=backend.name)
    if backend.kind in ("global", "partial") and s - n + 1 == 1:
        head = z_value(backend, n - 1, s)
        value = to_mpf(head.value) * _residue(backend)
        return ZetaValue(value=value, backend=backend.name, tail_bound=head.tail_bound)
    full = z_value(backend, n, s)
    scale = Fraction(s) - n + 1 if is_rational(s) else to_mpf(s) - n + 1
    value = full.value * scale if is_rational(full.value) and is_rational(scale) else to_mpf(full.value) * to_mpf(scale)
    return ZetaValue(value=value, backend=backend.name, tail_bound=full.tail_bound)


class ZetaSymbol(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["Z", "Zstar"]
    d: int
    s: int
    power: int = 1

    def to_json(self) -> Dict:
        out = {"kind": self.kind, "d": self.d, "s": self.s}
        if self.power != 1:
            out["power"] = self.power
        return out


class ZetaExpr(BaseModel):
    """A formal product of symbols Z_d(s) and Z*_d(s) with integer arguments."""

    model_config = ConfigDict(frozen=True)

    factors: Tuple[ZetaSymbol, ...] = ()

    def __mul__(self, other: "ZetaExpr") -> "ZetaExpr":
        return ZetaExpr(factors=self.factors + other.factors)

    def inverse(self) -> "ZetaExpr":
        return ZetaExpr(factors=tuple(f.model_copy(update={"power": -f.power}) for f in self.factors))

    def expand(self) -> Tuple[Fraction, Counter]:
        """
        Normal form (scalar, multiset of Z(s) arguments) using Z_d(s) = Z(s)...Z(s-d+1) and
        Z*_d(s) = (s-d+1) Z_d(s).
        """
        scalar, arguments = Fraction(1), Counter()
        for f in self.factors:
            for i in range(f.d):
                arguments[f.s - i] += f.power
            if f.kind == "Zstar" and f.d > 0:
                scalar *= Fraction(f.s - f.d + 1) ** f.power
        return scalar, Counter({k: v for k, v in arguments.items() if v})

    def evaluate(self, backend: ZetaBackend) -> ZetaValue:
        value, bounds = Fraction(1), []
        for f in self.factors:
            part = z_value(backend, f.d, f.s) if f.kind == "Z" else zeta_star(backend, f.d, f.s)
            bounds.append(part.tail_bound)
            factor = part.value if f.power > 0 else (1 / part.value)
            for _ in range(abs(f.power)):
                value = value * factor if is_rational(value) and is_rational(factor) else to_mpf(value) * to_mpf(factor)
        return ZetaValue(value=value, backend=backend.name, tail_bound=_combine_bounds(bounds))

    def to_json(self) -> List[Dict]:
        return [f.to_json() for f in self.factors]


def _c_expr(o: NilpotentOrbit) -> ZetaExpr:
    factors = []
    for j in range(1, o.r + 1):
        dj = o.d_of(j)
        if dj == 0:
            continue
        for i in range(1, j):
            factors.append(ZetaSymbol(kind="Z", d=dj, s=sum(o.d_of(m) for m in range(i, j + 1))))
    return ZetaExpr(factors=tuple(factors))


class ZetaResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    expr: ZetaExpr
    value: ZetaValue

    def to_json(self) -> Dict:
        return {"expr": self.expr.to_json(), **self.value.to_json()}


def _check_convergent(o: NilpotentOrbit, backend: ZetaBackend, what: str) -> None:
    if backend.kind in ("global", "partial") and not is_simple(o):
        raise DivergenceException(f"{what} for {o.partition}")


def c_constant(o: NilpotentOrbit, backend: ZetaBackend) -> ZetaResult:
    """
    c_X = prod over j of prod over i < j of Z_{d_j}(d_i + ... + d_j).

    Raises:
        DivergenceException: at a global or partial backend when the orbit is not simple
    """
    _check_convergent(o, backend, "c_X")
    expr = _c_expr(o)
    return ZetaResult(expr=expr, value=expr.evaluate(backend))


def c_adjacent(o: NilpotentOrbit, P1, P2, backend: ZetaBackend) -> ZetaResult:
    """c_{P1,P2}(X) = c_X / Z_{r1}(r1 + r2)."""
    _check_convergent(o, backend, "c_{P1,P2}")
    data = adjacency(P1, P2, o)
    expr = _c_expr(o) * ZetaExpr(factors=(ZetaSymbol(kind="Z", d=data.r1, s=data.r1 + data.r2, power=-1),))
    return ZetaResult(expr=expr, value=expr.evaluate(backend))


def vol_levi(sizes: Sequence[int], backend: Optional[ZetaBackend] = None) -> ZetaResult:
    """vol(M(Q)\\M(A)^1) = prod over blocks of Z*_{n_i}(n_i) for the completed zeta function."""
    backend = backend or ZetaBackend.completed()
    expr = ZetaExpr(factors=tuple(ZetaSymbol(kind="Zstar", d=m, s=m) for m in sizes))
    return ZetaResult(expr=expr, value=expr.evaluate(backend))


class VolumeIdentity(BaseModel):
    model_config = ConfigDict(frozen=True)

    lhs: ZetaExpr
    rhs: ZetaExpr
    holds: bool

    def to_json(self) -> Dict:
        return {"lhs": self.lhs.to_json(), "rhs": self.rhs.to_json(), "holds": self.holds}


def verify_volume_identity(o: NilpotentOrbit) -> VolumeIdentity:
    """Formal check of prod Z*_{d_i}(d_i) * c_X = prod Z*_{n_i}(n_i)."""
    lhs = ZetaExpr(factors=tuple(ZetaSymbol(kind="Zstar", d=o.d_of(i), s=o.d_of(i)) for i in range(1, o.r + 1))) * _c_expr(o)
    rhs = ZetaExpr(factors=tuple(ZetaSymbol(kind="Zstar", d=m, s=m) for m in levi_sizes(o)))
    return VolumeIdentity(lhs=lhs, rhs=rhs, holds=lhs.expand() == rhs.expand())


def finite_difference_defect(backend: ZetaBackend, d: int, s, order: int = 2, step: float = FINITE_DIFFERENCE_STEP) -> float:
    """Largest relative gap between z_jet coefficients and central differences of Z_d."""
    jet, _ = z_jet(backend, d, s, 1, order)
    jet = jet.numeric()
    f = lambda x: z_jet(backend, d, x)[0].numeric()[0]
    h = mpmath.mpf(step)
    estimates = [f(to_mpf(s))]
    if order >= 1:
        estimates.append((f(to_mpf(s) + h) - f(to_mpf(s) - h)) / (2 * h))
    if order >= 2:
        estimates.append((f(to_mpf(s) + h) - 2 * f(to_mpf(s)) + f(to_mpf(s) - h)) / (2 * h * h))
    worst = 0.0
    for exact, estimate in zip(jet.coefficients, estimates):
        scale = max(abs(exact), mpmath.mpf(1e-30))
        worst = max(worst, float(abs(exact - estimate) / scale))
    return worst


def maj_bound(o: NilpotentOrbit, L, backend: ZetaBackend) -> float:
    """
    Upper bound for |a^L(S, I_M^L(0))|: C vol(M) times the largest |Z_{r1}^{(k)}(r1 + r2) / Z_{r1}(r1 + r2)|
    over Q in P(L) and adjacent P1, P2 in P^Q(M), with k = dim a_M^L and C = |P^Q(M)| max ||alpha^vee||^k.
    """
    M = orbit_levi(o)
    volume = to_mpf(vol_levi(M.sizes).value.value)
    k = dim_a(M) - dim_a(L)
    if k == 0:
        return float(volume)
    worst = mpmath.mpf(0)
    for Q in parabolics_of(L):
        pairs = [(P1, P2) for P1, P2 in adjacent_pairs(M) if is_contained(P1, Q) and is_contained(P2, Q)]
        count = len(parabolics_in(M, Q))
        for P1, P2 in pairs:
            data = adjacency(P1, P2, o)
            jet, _ = z_jet(backend, data.r1, data.r1 + data.r2, 1, k)
            ratio = abs(to_mpf(jet.numeric()[k]) * factorial(k) / to_mpf(jet.numeric()[0]))
            norm = mpmath.sqrt(to_mpf(coroot_norm_squared(data.coroot))) ** k
            worst = max(worst, count * norm * ratio)
    logger.debug("maj bound %s L=%s k=%d factor=%s", o.partition, L.blocks, k, worst)
    return float(worst * volume)
