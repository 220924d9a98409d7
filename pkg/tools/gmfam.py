import logging
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict
from scipy.spatial import ConvexHull, QhullError

from tools.constant import FAMILY_RELATIVE_TOLERANCE, MAX_DIRECTION_ATTEMPTS
from tools.exceptions import BoundaryPointException, InvalidParabolicException, SingularDirectionException
from tools.jets import JetValue, exponential_of_linear, is_rational, to_mpf
from tools.roots import (
    LeviSubgroup,
    ParabolicSubgroup,
    borel_refinement,
    coroot,
    coroots,
    dim_a,
    flags_of,
    generic_direction,
    gram,
    inner,
    is_contained,
    levi_contains,
    levis_of,
    parabolics_in,
    parabolics_of,
    project,
    root_data,
    theta_parts,
    weyl,
    weyl_element_for,
)
from tools.utils import det, inverse

logger = logging.getLogger(__name__)


def _mul(a, b):
    if is_rational(a) and is_rational(b):
        return a * b
    return float(a) * float(b)


def _add(a, b):
    if is_rational(a) and is_rational(b):
        return a + b
    return float(a) + float(b)


def _sum(values):
    total = Fraction(0)
    for value in values:
        total = _add(total, value)
    return total


class SurdSum(BaseModel):
    """
    A value sum_r coefficient_r * sqrt(r) * (log log_prime)^log_power.

    Exact whenever the coefficients are rationals.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    terms: Dict[Fraction, Any]
    log_prime: Optional[int] = None
    log_power: int = 0

    @property
    def is_exact(self) -> bool:
        return all(is_rational(c) for c in self.terms.values())

    def value(self):
        total = mpmath.mpf(0)
        for radicand, coefficient in self.terms.items():
            total += mpmath.sqrt(to_mpf(radicand)) * to_mpf(coefficient)
        if self.log_prime:
            total *= mpmath.log(self.log_prime) ** self.log_power
        return total

    def to_json(self) -> Dict:
        return {
            "terms": [
                {"radicand": str(r), "coefficient": str(c) if is_rational(c) else float(c)}
                for r, c in sorted(self.terms.items())
                if c != 0
            ],
            "log_prime": self.log_prime,
            "log_power": self.log_power,
            "value": float(self.value()),
        }


class OrthogonalFamily(BaseModel):
    """
    Points Y_P of a_M indexed by P in P(M).

    When `log_prime` is set the coordinates are in units of log(log_prime).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    M: LeviSubgroup
    points: Dict[ParabolicSubgroup, Tuple[Any, ...]]
    log_prime: Optional[int] = None

    @classmethod
    def constant(cls, M: LeviSubgroup, y: Sequence, log_prime: Optional[int] = None) -> "OrthogonalFamily":
        y = project(y, M)
        return cls(M=M, points={P: y for P in parabolics_of(M)}, log_prime=log_prime)

    def at(self, Q: ParabolicSubgroup) -> Tuple:
        """Y_Q: the projection to a_Q of Y_P for any P in P(M) contained in Q."""
        P = next(P for P in parabolics_of(self.M) if is_contained(P, Q))
        return project(self.points[P], Q)

    def translate(self, v: Sequence) -> "OrthogonalFamily":
        v = project(v, self.M)
        return OrthogonalFamily(
            M=self.M,
            points={P: tuple(_add(a, b) for a, b in zip(y, v)) for P, y in self.points.items()},
            log_prime=self.log_prime,
        )

    def adjacency_multiples(self) -> List[Tuple[ParabolicSubgroup, ParabolicSubgroup, Any, Any]]:
        """
        For each adjacent (P, P'), the multiple c with Y_P - Y_P' = c * alpha^vee_P and the residual norm.
        """
        found = []
        for P in parabolics_of(self.M):
            blocks = list(P.ordered_blocks)
            for k in range(len(blocks) - 1):
                Pp = ParabolicSubgroup(ordered_blocks=blocks[:k] + [blocks[k + 1], blocks[k]] + blocks[k + 2:])
                alpha = coroot(P.n, blocks[k], blocks[k + 1])
                diff = tuple(a - b for a, b in zip(self.points[P], self.points[Pp]))
                c = inner(diff, alpha) / inner(alpha, alpha)
                residual = tuple(x - c * a for x, a in zip(diff, alpha))
                found.append((P, Pp, c, inner(residual, residual)))
        return found

    def is_orthogonal(self, tol: float = FAMILY_RELATIVE_TOLERANCE) -> bool:
        scale = max((abs(float(x)) for y in self.points.values() for x in y), default=0.0) or 1.0
        for _, _, _, residual in self.adjacency_multiples():
            if is_rational(residual):
                if residual != 0:
                    return False
            elif float(residual) > (tol * scale) ** 2:
                return False
        return True

    def is_positive(self) -> bool:
        return all(c >= 0 for _, _, c, _ in self.adjacency_multiples())

    def to_json(self) -> Dict:
        return {
            "log_prime": self.log_prime,
            "points": [
                {"parabolic": P.to_json(), "point": [str(x) if is_rational(x) else float(x) for x in y]}
                for P, y in sorted(self.points.items(), key=lambda item: item[0].ordered_blocks)
            ],
        }


JetGenerator = Callable[[ParabolicSubgroup, Tuple, int], JetValue]


class GMFamily(BaseModel):
    """A (G,M)-family, given by the jets of t -> c_P(t * direction) for P in P(M)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    M: LeviSubgroup
    generator: JetGenerator
    label: str = "family"

    def jet(self, P: ParabolicSubgroup, direction: Sequence, order: int) -> JetValue:
        return self.generator(P, tuple(direction), order)

    @classmethod
    def exponential(cls, family: OrthogonalFamily) -> "GMFamily":
        """c_P(lambda) = exp(<lambda, Y_P>)."""

        def _generator(P, direction, order):
            return exponential_of_linear(inner(direction, family.points[P]), order, family.log_prime)

        return cls(M=family.M, generator=_generator, label="exponential")

    def __mul__(self, other: "GMFamily") -> "GMFamily":
        def _generator(P, direction, order):
            return self.jet(P, direction, order) * other.jet(P, direction, order)

        return GMFamily(M=self.M, generator=_generator, label=f"{self.label}*{other.label}")


def _below(M: LeviSubgroup, P: ParabolicSubgroup) -> ParabolicSubgroup:
    below = next((B for B in parabolics_of(M) if is_contained(B, P)), None)
    if below is None:
        raise InvalidParabolicException(P.to_json(), "does not contain the Levi of the family")
    return below


def gm_value_exact(
    fam: GMFamily,
    L: LeviSubgroup,
    Q: ParabolicSubgroup,
    direction: Optional[Sequence] = None,
    attempt: int = 0,
) -> SurdSum:
    """
    v_L^Q(fam) = (1/k!) sum over P in P^Q(L) of d^k/dt^k c_P(t * Lambda) at t = 0, times theta_P^Q(Lambda).

    Args:
        fam: The (G,M)-family
        L: A Levi subgroup containing M
        Q: A parabolic whose Levi contains L
        direction: Lambda in a_L^Q; a generic one is chosen when omitted
        attempt: Which generic direction to use

    Returns:
        The value as a sum of square roots, exact when the jets are exact

    Raises:
        SingularDirectionException: when Lambda lies on a singular hyperplane
    """
    if not levi_contains(L, fam.M) or not levi_contains(Q.levi, L):
        raise InvalidParabolicException(Q.to_json(), "expected M inside L inside M_Q")
    k = dim_a(L) - dim_a(Q)
    lam = tuple(direction) if direction is not None else generic_direction(L, Q, attempt)
    terms: Dict[Fraction, Any] = {}
    log_prime = None
    for P in parabolics_in(L, Q):
        jet = fam.jet(_below(fam.M, P), lam, k)
        log_prime = log_prime or jet.log_prime
        cov_sq, factor = theta_parts(P, Q, lam)
        contribution = _mul(jet[k], factor)
        terms[cov_sq] = _add(terms.get(cov_sq, Fraction(0)), contribution)
        logger.debug("gm_value P=%s coefficient=%s theta factor=%s", P.to_json(), jet[k], factor)
    return SurdSum(terms=terms, log_prime=log_prime, log_power=k)


def gm_value(fam: GMFamily, L: LeviSubgroup, Q: ParabolicSubgroup, direction: Optional[Sequence] = None, attempt: int = 0) -> float:
    return float(gm_value_exact(fam, L, Q, direction, attempt).value())


class HullVolume(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: float
    exact: Optional[SurdSum] = None
    dimension: int
    positive: bool


def _basis(M: LeviSubgroup) -> List[Tuple[Fraction, ...]]:
    """Coroots of the first P in P(M): a rational basis of a_M^G."""
    return coroots(parabolics_of(M)[0])


def _coordinates(points: Sequence[Sequence], basis: List[Tuple]) -> List[Tuple]:
    """Coordinates of the a_M^G-components of the points in the given basis."""
    g_inv = inverse(gram(basis))
    coords = []
    for y in points:
        pairings = [inner(y, b) for b in basis]
        coords.append(tuple(_sum(_mul(g_inv[i][j], pairings[j]) for j in range(len(basis))) for i in range(len(basis))))
    return coords


def hull_volume(fam: OrthogonalFamily) -> HullVolume:
    """
    Volume of the projection to a_M^G of the convex hull of the Y_P.

    Facets come from qhull; the volume is summed exactly over the fan of simplices from the
    lowest-indexed hull vertex, in coordinates along the coroots of a_M^G.
    """
    M = fam.M
    d = dim_a(M) - 1
    positive = fam.is_positive()
    if not positive:
        logger.warning("hull_volume called on a non-positive orthogonal family")
    if d == 0:
        return HullVolume(value=1.0, exact=SurdSum(terms={Fraction(1): Fraction(1)}), dimension=0, positive=positive)
    basis = _basis(M)
    cov_sq = det(gram(basis))
    coords = _coordinates(list(fam.points.values()), basis)
    unique = sorted(set(coords), key=lambda c: tuple(float(x) for x in c))
    if d == 1:
        values = [c[0] for c in unique]
        length = _add(max(values), -min(values))
        exact = SurdSum(terms={cov_sq: length}, log_prime=fam.log_prime, log_power=1)
        return HullVolume(value=float(exact.value()), exact=exact, dimension=1, positive=positive)
    array = np.array([[float(x) for x in c] for c in unique])
    try:
        hull = ConvexHull(array, qhull_options="Qt")
    except (QhullError, ValueError):
        logger.debug("degenerate hull of %d points in dimension %d", len(unique), d)
        exact = SurdSum(terms={cov_sq: Fraction(0)}, log_prime=fam.log_prime, log_power=d)
        return HullVolume(value=0.0, exact=exact, dimension=d, positive=positive)
    base = int(min(hull.vertices))
    total = Fraction(0)
    for simplex in hull.simplices:
        if base in simplex:
            continue
        rows = [[_add(unique[int(v)][i], -unique[base][i]) for i in range(d)] for v in simplex]
        total = _add(total, abs(_det(rows)))
    volume = _mul(total, Fraction(1, factorial(d)))
    exact = SurdSum(terms={cov_sq: volume}, log_prime=fam.log_prime, log_power=d)
    return HullVolume(value=float(exact.value()), exact=exact, dimension=d, positive=positive)


def _det(rows: List[List]):
    if all(is_rational(x) for row in rows for x in row):
        return det(rows)
    return float(np.linalg.det(np.array([[float(x) for x in row] for row in rows])))


def hull_indicator(fam: OrthogonalFamily, H: Sequence) -> int:
    """Geometric membership of the a_M^G-component of H in the hull of the Y_P, by facet half-spaces."""
    M = fam.M
    d = dim_a(M) - 1
    if d == 0:
        return 1
    basis = _basis(M)
    coords = _coordinates(list(fam.points.values()), basis)
    (h,) = _coordinates([H], basis)
    if d == 1:
        values = [float(c[0]) for c in coords]
        x = float(h[0])
        low, high = min(values), max(values)
        if abs(x - low) <= FAMILY_RELATIVE_TOLERANCE or abs(x - high) <= FAMILY_RELATIVE_TOLERANCE:
            raise BoundaryPointException(tuple(H))
        return int(low < x < high)
    hull = ConvexHull(np.array([[float(x) for x in c] for c in coords]))
    offsets = hull.equations[:, :-1] @ np.array([float(x) for x in h]) + hull.equations[:, -1]
    if np.any(np.abs(offsets) <= FAMILY_RELATIVE_TOLERANCE):
        raise BoundaryPointException(tuple(H))
    return int(np.all(offsets < 0))


def alternating_sum(fam: OrthogonalFamily, H: Sequence) -> int:
    """
    sum over Q in F(M) of (-1)^{dim a_Q^G} tau_hat_Q(H - Y_Q).

    Raises:
        BoundaryPointException: when some H - Y_Q lies on a wall of its cone
    """
    n = fam.M.n
    G = ParabolicSubgroup(ordered_blocks=[tuple(range(n))])
    total = 0
    for Q in flags_of(fam.M):
        X = tuple(_add(a, -b) for a, b in zip(H, fam.at(Q)))
        pairings = [inner(w, X) for w in root_data(Q, G).weights]
        if any((p == 0) if is_rational(p) else abs(float(p)) <= FAMILY_RELATIVE_TOLERANCE for p in pairings):
            raise BoundaryPointException(tuple(H))
        if all(p > 0 for p in pairings):
            total += (-1) ** (dim_a(Q) - 1)
    return total


class SplittingTerm(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    L1: LeviSubgroup
    L2: LeviSubgroup
    Q1: ParabolicSubgroup
    Q2: ParabolicSubgroup
    coefficient_squared: Fraction

    @property
    def coefficient(self) -> float:
        return float(mpmath.sqrt(to_mpf(self.coefficient_squared)))


def _levi_basis(M: LeviSubgroup, L: LeviSubgroup) -> List[Tuple[Fraction, ...]]:
    """Rational basis of a_M^L: the coroots of P inside Q, for Q in P(L) and P in P(M), P in Q."""
    Q = parabolics_of(L)[0]
    return coroots(_below(M, Q), Q)


def splitting(M: LeviSubgroup, L: LeviSubgroup, L1: LeviSubgroup, L2: LeviSubgroup) -> Fraction:
    """
    Squared Jacobian of a_M^{L1} + a_M^{L2} -> a_M^L, or 0 when the sum is not direct.

    Args:
        M: The common Levi
        L: The ambient Levi
        L1: A Levi in L(M) contained in L
        L2: Another one

    Returns:
        d_M^L(L1, L2) squared, as an exact rational
    """
    b1, b2 = _levi_basis(M, L1), _levi_basis(M, L2)
    if len(b1) + len(b2) != dim_a(M) - dim_a(L):
        return Fraction(0)
    whole = det(gram(b1 + b2)) if b1 + b2 else Fraction(1)
    if whole == 0:
        return Fraction(0)
    g1 = det(gram(b1)) if b1 else Fraction(1)
    g2 = det(gram(b2)) if b2 else Fraction(1)
    return whole / (g1 * g2)


def _groups(L: LeviSubgroup, Q: ParabolicSubgroup) -> List[List[Tuple[int, ...]]]:
    """The blocks of L inside each block of Q, in the order of Q."""
    return [[block for block in L.blocks if set(block) <= set(group)] for group in Q.ordered_blocks]


def _chamber(L: LeviSubgroup, xi: Sequence, descending: bool, Q: ParabolicSubgroup) -> ParabolicSubgroup:
    order = []
    for inside in _groups(L, Q):
        order.extend(sorted(inside, key=lambda block: xi[block[0]], reverse=descending))
    return ParabolicSubgroup(ordered_blocks=order)


def _separates(L: LeviSubgroup, xi: Sequence, Q: ParabolicSubgroup) -> bool:
    for inside in _groups(L, Q):
        values = [xi[block[0]] for block in inside]
        if len(set(values)) != len(values):
            return False
    return True


def splitting_terms(
    M: LeviSubgroup,
    levis: Optional[Sequence[LeviSubgroup]] = None,
    Q: Optional[ParabolicSubgroup] = None,
) -> List[SplittingTerm]:
    """
    The pairs (L1, L2) in L^{M_Q}(M) with d_M^{M_Q}(L1, L2) != 0, with the parabolics Q1 in P(L1) and Q2 in
    P(L2) inside Q selected by a generic xi = xi1 + xi2, xi1 in a_{L1}^Q, xi2 in a_{L2}^Q: Q1 is the chamber
    of xi1, Q2 that of -xi2. Q defaults to G.
    """
    Q = Q or ParabolicSubgroup(ordered_blocks=[tuple(range(M.n))])
    levis = list(levis) if levis is not None else levis_of(M, ambient=Q.levi)
    terms = []
    for L1 in levis:
        for L2 in levis:
            d_sq = splitting(M, Q.levi, L1, L2)
            if d_sq == 0:
                continue
            Q1, Q2 = _split_chambers(M, L1, L2, Q)
            terms.append(SplittingTerm(L1=L1, L2=L2, Q1=Q1, Q2=Q2, coefficient_squared=d_sq))
    return terms


def _split_chambers(
    M: LeviSubgroup, L1: LeviSubgroup, L2: LeviSubgroup, Q: ParabolicSubgroup
) -> Tuple[ParabolicSubgroup, ParabolicSubgroup]:
    basis1 = coroots(_below(L1, Q), Q)
    basis2 = coroots(_below(L2, Q), Q)
    basis = basis1 + basis2
    for attempt in range(MAX_DIRECTION_ATTEMPTS):
        xi = generic_direction(M, Q, attempt)
        if not basis:
            return _chamber(L1, xi, True, Q), _chamber(L2, xi, False, Q)
        coefficients = _coordinates([xi], basis)[0]
        xi1 = [sum((coefficients[i] * basis1[i][a] for i in range(len(basis1))), Fraction(0)) for a in range(M.n)]
        xi2 = [xi[a] - xi1[a] for a in range(M.n)]
        if _separates(L1, xi1, Q) and _separates(L2, xi2, Q):
            return _chamber(L1, xi1, True, Q), _chamber(L2, xi2, False, Q)
    raise SingularDirectionException(f"no generic splitting direction for {L1.blocks}, {L2.blocks}")


def splitting_expansion(c: GMFamily, d: GMFamily) -> Tuple[float, float]:
    """
    Both sides of v_M(c d) = sum d_M^G(L1, L2) v_M^{Q1}(c) v_M^{Q2}(d).

    Returns:
        (left-hand side, right-hand side)
    """
    M = c.M
    G = ParabolicSubgroup(ordered_blocks=[tuple(range(M.n))])
    lhs = gm_value(c * d, M, G)
    rhs = 0.0
    for term in splitting_terms(M):
        rhs += term.coefficient * gm_value(c, M, term.Q1) * gm_value(d, M, term.Q2)
    return lhs, rhs


def t_family(L: LeviSubgroup, T: Sequence) -> OrthogonalFamily:
    """T_P = projection to a_P of w.T, where P contains the Borel w B_0 w^{-1}."""
    points = {}
    for P in parabolics_of(L):
        w = weyl_element_for(borel_refinement(P))
        points[P] = project(weyl(w, tuple(T)), P)
    return OrthogonalFamily(M=L, points=points)


class WeightPolynomial(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    degree: int
    polynomial: str
    coefficients: Dict[str, str]
    value: float


def weight_T_polynomial(L: LeviSubgroup, Q: ParabolicSubgroup, T: Sequence) -> WeightPolynomial:
    """
    v_L^Q(1, T) = (1/k!) sum over P in P^Q(L) of <Lambda, T_P>^k theta_P^Q(Lambda), as a polynomial in T.

    The polynomial is built from symbols t1..tn and evaluated at the given T.
    """
    n = L.n
    symbols = sympy.symbols(f"t1:{n + 1}")
    k = dim_a(L) - dim_a(Q)
    lam = generic_direction(L, Q)
    expression = sympy.Integer(0)
    for P in parabolics_in(L, Q):
        w = weyl_element_for(borel_refinement(P))
        T_P = _symbolic_projection(weyl(w, symbols), P)
        pairing = sum(sympy.Rational(x.numerator, x.denominator) * y for x, y in zip(lam, T_P))
        cov_sq, factor = theta_parts(P, Q, lam)
        expression += (
            pairing**k
            / sympy.factorial(k)
            * sympy.Rational(factor.numerator, factor.denominator)
            * sympy.sqrt(sympy.Rational(cov_sq.numerator, cov_sq.denominator))
        )
    poly = sympy.expand(expression)
    substitution = {s: _sympify(t) for s, t in zip(symbols, T)}
    value = float(poly.subs(substitution))
    coefficients = {}
    if poly != 0:
        for monomial, coefficient in sympy.Poly(poly, *symbols).terms():
            coefficients["*".join(f"t{i + 1}^{e}" for i, e in enumerate(monomial) if e)] = str(coefficient)
    degree = sympy.Poly(poly, *symbols).total_degree() if poly != 0 else 0
    return WeightPolynomial(degree=degree, polynomial=str(poly), coefficients=coefficients, value=value)


def _sympify(t):
    if isinstance(t, Fraction):
        return sympy.Rational(t.numerator, t.denominator)
    if isinstance(t, int):
        return sympy.Integer(t)
    return sympy.Float(t)


def _symbolic_projection(x: Sequence, P: ParabolicSubgroup) -> List:
    out = list(x)
    for block in P.ordered_blocks:
        mean = sum(x[a] for a in block) / len(block)
        for a in block:
            out[a] = mean
    return out


def recollement_defect(fam: GMFamily, order: int, attempt: int = 0) -> float:
    """
    Largest difference between the jets of adjacent c_P, c_P' along a direction on their common wall.
    """
    M = fam.M
    G = ParabolicSubgroup(ordered_blocks=[tuple(range(M.n))])
    worst = 0.0
    for P in parabolics_of(M):
        blocks = list(P.ordered_blocks)
        for k in range(len(blocks) - 1):
            Pp = ParabolicSubgroup(ordered_blocks=blocks[:k] + [blocks[k + 1], blocks[k]] + blocks[k + 2:])
            alpha = coroot(P.n, blocks[k], blocks[k + 1])
            lam = generic_direction(M, G, attempt)
            c = inner(lam, alpha) / inner(alpha, alpha)
            wall = tuple(x - c * a for x, a in zip(lam, alpha))
            a_jet = fam.jet(P, wall, order).numeric()
            b_jet = fam.jet(Pp, wall, order).numeric()
            for x, y in zip(a_jet.coefficients, b_jet.coefficients):
                worst = max(worst, float(abs(to_mpf(x) - to_mpf(y))))
    return worst
