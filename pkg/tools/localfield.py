import logging
import random
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import sympy
from pydantic import BaseModel, ConfigDict, field_validator

from tools.constant import (
    ARCHIMEDEAN_TOLERANCE,
    COMPLEX_PLACE,
    CONJUGATOR_SEED,
    MAX_CONJUGATOR_ATTEMPTS,
    REAL_PLACE,
)
from tools.exceptions import InvalidPartitionException, InvalidPlaceException, OrbitMembershipException, SingularMatrixException
from tools.gmfam import OrthogonalFamily, alternating_sum, t_family
from tools.orbits import (
    NilpotentOrbit,
    centralizer,
    entries_of,
    jordan_type,
    standard_nilpotent,
)
from tools.richardson import adjacency, orbit_levi, richardson_map
from tools.roots import AVector, ParabolicSubgroup, norm_quotient, parabolics_of, weyl
from tools.utils import Matrix, det, identity, inverse, matadd, matmul, nullspace, prime_support, valuation

logger = logging.getLogger(__name__)


class Place(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["real", "complex", "padic"]
    prime: Optional[int] = None

    @field_validator("prime")
    @classmethod
    def _check_prime(cls, value):
        if value is not None and not sympy.isprime(value):
            raise InvalidPlaceException(value, "q must be prime")
        return value

    @classmethod
    def parse(cls, text) -> "Place":
        """Accepts "inf", "real", "complex", "p5" or "5"."""
        token = str(text).strip().lower()
        if token in (REAL_PLACE, "real", "r"):
            return cls(kind="real")
        if token in (COMPLEX_PLACE, "c"):
            return cls(kind="complex")
        digits = token[1:] if token.startswith("p") else token
        if not digits.isdigit():
            raise InvalidPlaceException(text)
        return cls(kind="padic", prime=int(digits))

    @property
    def is_archimedean(self) -> bool:
        return self.kind != "padic"

    @property
    def name(self) -> str:
        if self.kind == "real":
            return REAL_PLACE
        if self.kind == "complex":
            return COMPLEX_PLACE
        return f"p{self.prime}"


class LogValue(BaseModel):
    """Either c * log q exactly (coefficient and prime) or a float."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficient: Optional[Fraction] = None
    prime: Optional[int] = None
    numeric: Optional[float] = None

    @property
    def is_exact(self) -> bool:
        return self.coefficient is not None

    def to_float(self) -> float:
        if self.is_exact:
            return float(self.coefficient) * float(np.log(self.prime))
        return float(self.numeric)

    def __neg__(self) -> "LogValue":
        if self.is_exact:
            return LogValue(coefficient=-self.coefficient, prime=self.prime)
        return LogValue(numeric=-self.numeric)

    def to_json(self) -> Dict:
        if self.is_exact:
            return {"coefficient": str(self.coefficient), "prime": self.prime, "value": self.to_float()}
        return {"value": self.to_float()}


class IwasawaResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    H: AVector
    b: Any  # the P-part, exact matrix or numpy array
    k: Any  # the compact residue witness


def _order(P: ParabolicSubgroup) -> List[int]:
    return [a for block in P.ordered_blocks for a in block]


def _permute(g, order: Sequence[int]):
    return [[g[order[s]][order[t]] for t in range(len(order))] for s in range(len(order))]


def _unpermute(g, order: Sequence[int]):
    n = len(order)
    out = [[None] * n for _ in range(n)]
    for s in range(n):
        for t in range(n):
            out[order[s]][order[t]] = g[s][t]
    return out


def _padic_triangularize(g: Matrix, p: int) -> Matrix:
    """
    Integral column operations bringing g to upper triangular form, working from the bottom row up.

    Returns:
        b = g k^{-1} upper triangular, with k^{-1} in GL_n(Z_p)
    """
    b = [row[:] for row in g]
    n = len(b)
    for row in range(n - 1, -1, -1):
        live = [c for c in range(row + 1) if b[row][c] != 0]
        if not live:
            raise SingularMatrixException()
        pivot = min(live, key=lambda c: valuation(b[row][c], p))
        if pivot != row:
            for r in range(n):
                b[r][pivot], b[r][row] = b[r][row], b[r][pivot]
        for c in range(row):
            if b[row][c] != 0:
                factor = b[row][c] / b[row][row]
                for r in range(n):
                    b[r][c] -= factor * b[r][row]
        logger.debug("p-adic pivot row=%d valuation=%d", row, valuation(b[row][row], p))
    return b


def _block_average(diagonal: Sequence, P_std: Sequence[int]) -> List:
    out, start = [], 0
    for size in P_std:
        mean = sum(diagonal[start:start + size], type(diagonal[0])(0)) / size
        out.extend([mean] * size)
        start += size
    return out


def iwasawa(g: Matrix, P: ParabolicSubgroup, place: Place) -> IwasawaResult:
    """
    Iwasawa decomposition g = b k with b in P and k in the maximal compact subgroup.

    Args:
        g: An invertible rational matrix
        P: The parabolic subgroup
        place: Where to decompose

    Returns:
        H_P(g) (in units of log q at a p-adic place), b and k

    Raises:
        SingularMatrixException: when g is not invertible
    """
    if det(g) == 0:
        raise SingularMatrixException()
    order = _order(P)
    sizes = P.sizes
    gp = _permute(g, order)
    if place.kind == "padic":
        p = place.prime
        bp = _padic_triangularize(gp, p)
        diagonal = [Fraction(-valuation(bp[a][a], p)) for a in range(len(bp))]
        averaged = _block_average(diagonal, sizes)
        b = _unpermute(bp, order)
        k = matmul(inverse(b), g)
        H = [Fraction(0)] * len(order)
        for s, a in enumerate(order):
            H[a] = averaged[s]
        return IwasawaResult(H=AVector(coordinates=tuple(H), log_prime=p), b=b, k=k)
    array = np.array([[float(x) for x in row] for row in gp])
    r, q = scipy.linalg.rq(array)
    diagonal = [float(np.log(abs(r[a, a]))) for a in range(len(order))]
    if place.kind == "complex":
        diagonal = [2 * x for x in diagonal]
    averaged = _block_average(diagonal, sizes)
    H = [0.0] * len(order)
    for s, a in enumerate(order):
        H[a] = averaged[s]
    b = np.array(_unpermute(r.tolist(), order))
    k = np.array(_unpermute(q.tolist(), order))
    if not np.allclose(k @ k.T, np.eye(len(order)), atol=ARCHIMEDEAN_TOLERANCE * 1e3):
        logger.warning("archimedean residue is not orthogonal to tolerance")
    return IwasawaResult(H=AVector(coordinates=tuple(H)), b=b, k=k)


def r_value(P: ParabolicSubgroup, g: Matrix, o: NilpotentOrbit, place: Place) -> AVector:
    """R_P(g) = H_P(w_P g) = w_P . H_{P tilde}(g)."""
    Pt, w = richardson_map(P, o)
    return weyl(w, iwasawa(g, Pt, place).H)


def r_value_with(P: ParabolicSubgroup, w: Sequence[int], g: Matrix, place: Place) -> AVector:
    """R_P(g) for an explicit representative w of the coset W^{M_P} w_P."""
    return weyl(w, iwasawa(g, weyl(w, P), place).H)


def adelic_places(g: Matrix) -> List[Place]:
    entries = [x for row in g for x in row] + [x for row in inverse(g) for x in row] + [det(g)]
    return [Place(kind="real")] + [Place(kind="padic", prime=p) for p in prime_support(entries)]


def r_value_adelic(P: ParabolicSubgroup, g: Matrix, o: NilpotentOrbit) -> Tuple[Dict[str, AVector], Tuple[float, ...]]:
    """
    R_P(g) as the sum over the finitely many places where g is not integral.

    Returns:
        (place name -> local value, the global float vector)
    """
    local = {v.name: r_value(P, g, o, v) for v in adelic_places(g)}
    total = [0.0] * len(g)
    for value in local.values():
        total = [x + y for x, y in zip(total, value.as_floats())]
    return local, tuple(total)


def r_family(g: Matrix, o: NilpotentOrbit, place: Optional[Place] = None) -> OrthogonalFamily:
    """
    The orthogonal family (-R_P(g)) for P in P(M); at a single place, or adelic when place is None.
    """
    M = orbit_levi(o)
    points = {}
    log_prime = None
    for P in parabolics_of(M):
        if place is None:
            _, total = r_value_adelic(P, g, o)
            points[P] = tuple(-x for x in total)
        else:
            value = r_value(P, g, o, place)
            log_prime = value.log_prime
            points[P] = tuple(-x for x in value.coordinates)
    return OrthogonalFamily(M=M, points=points, log_prime=log_prime)


def _intertwiners(x: Matrix, y: Matrix) -> List[List[Fraction]]:
    """Basis of {g : X g = g Y} as flattened matrices."""
    n = len(x)
    equations = []
    for row in range(n):
        for col in range(n):
            eq = [Fraction(0)] * (n * n)
            for t in range(n):
                eq[t * n + col] += x[row][t]
                eq[row * n + t] -= y[t][col]
            equations.append(eq)
    return nullspace(equations)


def _invertible_combination(basis: List[List[Fraction]], n: int, rng: random.Random) -> Optional[Matrix]:
    candidates = [[vec] for vec in basis] + [basis]
    for attempt in range(MAX_CONJUGATOR_ATTEMPTS):
        if attempt < len(candidates):
            weights = [1] * len(candidates[attempt])
            chosen = candidates[attempt]
        else:
            weights = [rng.randint(-3, 3) for _ in basis]
            chosen = basis
        flat = [sum((w * v[i] for w, v in zip(weights, chosen)), Fraction(0)) for i in range(n * n)]
        g = [flat[r * n:(r + 1) * n] for r in range(n)]
        if det(g) != 0:
            return g
    return None


def conjugator_from_X(y: Matrix, o: Optional[NilpotentOrbit] = None, seed: int = CONJUGATOR_SEED) -> Matrix:
    """
    A rational g with g^{-1} X g = Y, for the standard nilpotent X of the orbit of Y.

    Raises:
        OrbitMembershipException: when Y is not nilpotent, has another Jordan type or no invertible solution
            is found
    """
    try:
        partition = jordan_type(y)
    except InvalidPartitionException as e:
        raise OrbitMembershipException(f"Y is not nilpotent: {e}")
    if o is not None and partition != o.partition:
        raise OrbitMembershipException(f"Jordan type {partition} differs from {o.partition}")
    o = o or NilpotentOrbit.from_partition(partition)
    x, _ = standard_nilpotent(o)
    g = _invertible_combination(_intertwiners(x, y), len(y), random.Random(seed))
    if g is None:
        raise OrbitMembershipException("no invertible solution of X g = g Y")
    return g


def centralizer_element(o: NilpotentOrbit, rng: random.Random) -> Matrix:
    """A random rational element of G_X."""
    x, _ = standard_nilpotent(o)
    basis = _intertwiners(x, x)
    n = len(x)
    for _ in range(MAX_CONJUGATOR_ATTEMPTS):
        weights = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in basis]
        flat = [sum((w * v[i] for w, v in zip(weights, basis)), Fraction(0)) for i in range(n * n)]
        h = [flat[r * n:(r + 1) * n] for r in range(n)]
        if det(h) != 0:
            return h
    raise SingularMatrixException("no invertible centralizer element found")


def solve_in_N(y: Matrix, o: NilpotentOrbit) -> Matrix:
    """
    n in N with n^{-1} X n = Y, for Y in the affine space X + o.

    Solves X U - U Y = Y - X for U supported on n, free coordinates set to zero; the solution is
    unique modulo N_X.

    Raises:
        OrbitMembershipException: when Y - X is not supported on o or the system has no solution
    """
    x, layout = standard_nilpotent(o)
    n = layout.n
    allowed = set(entries_of(layout, centralizer(o).o_positions))
    delta = matadd(y, x, -1)
    stray = [(r, c) for r in range(n) for c in range(n) if delta[r][c] != 0 and (r, c) not in allowed]
    if stray:
        raise OrbitMembershipException(f"Y - X has entries outside o at {stray}")
    unknowns = entries_of(layout, centralizer(o).n_positions)
    index = {entry: i for i, entry in enumerate(unknowns)}
    rows, rhs = [], []
    for r in range(n):
        for c in range(n):
            eq = [0] * len(unknowns)
            # (X U - U Y)[r][c]
            for t in range(n):
                if (t, c) in index and x[r][t] != 0:
                    eq[index[(t, c)]] += x[r][t]
                if (r, t) in index and y[t][c] != 0:
                    eq[index[(r, t)]] -= y[t][c]
            rows.append(eq)
            rhs.append(delta[r][c])
    system = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else v for v in row] for row in rows])
    target = sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in rhs])
    try:
        solution, params = system.gauss_jordan_solve(target)
    except ValueError as e:
        raise OrbitMembershipException(f"no solution in N: {e}")
    solution = solution.subs({p: 0 for p in params})
    u = identity(n)
    for (r, c), i in index.items():
        value = solution[i]
        u[r][c] += Fraction(int(value.p), int(value.q))
    if matmul(x, u) != matmul(u, y):
        raise OrbitMembershipException("solution does not conjugate X to Y")
    return u


def random_unipotent_perturbation(o: NilpotentOrbit, rng: random.Random) -> Tuple[Matrix, Matrix]:
    """(n0, n0^{-1} X n0) for a random n0 in N(Q)."""
    x, layout = standard_nilpotent(o)
    n0 = identity(layout.n)
    for r, c in entries_of(layout, centralizer(o).n_positions):
        n0[r][c] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    return n0, matmul(matmul(inverse(n0), x), n0)


def u13_logdet(y: Matrix, P1: ParabolicSubgroup, P2: ParabolicSubgroup, o: NilpotentOrbit, place: Place, g: Optional[Matrix] = None) -> LogValue:
    """
    log|det U_{1,3}|, where U = k Y k^{-1} lies in n of the refined flag and k is the compact part of a
    conjugator g (g^{-1} X g = Y).

    -R_{P1}(g) + R_{P2}(g) equals this value times the coroot alpha^vee of P1.
    """
    data = adjacency(P1, P2, o)
    g = g if g is not None else conjugator_from_X(y, o)
    result = iwasawa(g, data.refined, place)
    if place.kind == "padic":
        k = result.k
        u = matmul(matmul(k, y), inverse(k))
        block = [[u[r][c] for c in data.W3] for r in data.W1]
        value = det(block)
        if value == 0:
            raise OrbitMembershipException("U_{1,3} is singular")
        return LogValue(coefficient=Fraction(-valuation(value, place.prime)), prime=place.prime)
    k = result.k
    ya = np.array([[float(v) for v in row] for row in y])
    u = k @ ya @ np.linalg.inv(k)
    block = u[np.ix_(list(data.W1), list(data.W3))]
    value = float(np.log(abs(np.linalg.det(block))))
    return LogValue(numeric=2 * value if place.kind == "complex" else value)


def sigma_T(g: Matrix, o: NilpotentOrbit, T: Sequence, place: Optional[Place] = None) -> int:
    """
    The alternating sum over F(M) of tau_hat_Q(R_Q(g) - T_Q), i.e. the hull indicator of 0 for the family
    T_P - R_P(g).
    """
    M = orbit_levi(o)
    t_points = t_family(M, T).points
    r_points = r_family(g, o, place)
    points = {}
    for P in parabolics_of(M):
        minus_r = r_points.points[P]
        if r_points.log_prime:
            minus_r = AVector(coordinates=minus_r, log_prime=r_points.log_prime).as_floats()
        points[P] = tuple(float(t) + float(m) for t, m in zip(t_points[P], minus_r))
    family = OrthogonalFamily(M=M, points=points)
    return alternating_sum(family, (0.0,) * len(g))


def weyl_equivariance_defect(g: Matrix, o: NilpotentOrbit, place: Place) -> List[Tuple]:
    """Differences R_P(g) - w.R_{P^w}(g) for w in Norm_W(M); all vanish."""
    M = orbit_levi(o)
    defects = []
    for w in norm_quotient(M):
        for P in parabolics_of(M):
            lhs = r_value(P, g, o, place)
            rhs = weyl(w, r_value(weyl(w, P), g, o, place))
            defects.append(tuple(a - b for a, b in zip(lhs.coordinates, rhs.coordinates)))
    return defects
