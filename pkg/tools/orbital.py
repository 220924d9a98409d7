import functools
import itertools
import logging
import math
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import sympy
from pydantic import BaseModel, ConfigDict

from tools.constant import DEFAULT_DEPTH, EXACT_TAG, LATTICE_PRIME_CUTOFF, TAIL_HORIZON_FACTOR
from tools.exceptions import (
    DivergenceException,
    InvalidParabolicException,
    UnipotentToolException,
    UnsupportedOrbitException,
)
from tools.gmfam import (
    GMFamily,
    OrthogonalFamily,
    SurdSum,
    gm_value_exact,
    splitting,
    splitting_terms,
    weight_T_polynomial,
)
from tools.jets import JetValue, is_rational, one, to_mpf
from tools.localfield import Place, conjugator_from_X, r_family
from tools.orbits import (
    BasisLayout,
    NilpotentOrbit,
    Partition,
    centralizer,
    induce_orbit,
    is_simple,
    jordan_type,
    richardson_orbit,
)
from tools.richardson import (
    adjacency,
    adjacent_pairs,
    chain_reversal,
    contains_refined_flag,
    dual_parabolic,
    orbit_levi,
    richardson_map,
)
from tools.roots import (
    LeviSubgroup,
    ParabolicSubgroup,
    coroot_norm_squared,
    dim_a,
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
    theta_parts,
    weyl,
    weyl_order,
)
from tools.zeta import ZetaBackend, c_constant, maj_bound, vol_levi, z_jet

logger = logging.getLogger(__name__)


def _whole(n: int) -> ParabolicSubgroup:
    return ParabolicSubgroup(ordered_blocks=[tuple(range(n))])


def _product(values: Sequence):
    total = Fraction(1)
    for v in values:
        total = total * v if is_rational(total) and is_rational(v) else to_mpf(total) * to_mpf(v)
    return total


def _merge_bounds(bounds: Sequence) -> Any:
    numeric = [float(b) for b in bounds if b != EXACT_TAG]
    return max(numeric) if numeric else EXACT_TAG


class OrbitalValue(BaseModel):
    """A weighted orbital integral value with its provenance."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Any
    backend: str
    method: str
    tail_bound: Any = EXACT_TAG
    exact: Optional[Dict] = None

    def to_float(self) -> float:
        return float(self.value)

    def to_json(self) -> Dict:
        out = {"value": self.to_float(), "backend": self.backend, "method": self.method, "tail_bound": self.tail_bound}
        if self.exact is not None:
            out["exact"] = self.exact
        return out


class UnitFunctionSpec(BaseModel):
    """
    The unit function at a single place, on a finite set S of places, or outside S.
    """

    model_config = ConfigDict(frozen=True)

    places: Tuple[Place, ...]
    outside: bool = False
    cutoff: Optional[int] = None

    @classmethod
    def at(cls, place: Place) -> "UnitFunctionSpec":
        return cls(places=(place,))

    @classmethod
    def outside_of(cls, places: Sequence[Place], cutoff: Optional[int] = None) -> "UnitFunctionSpec":
        return cls(places=tuple(places), outside=True, cutoff=cutoff)

    @property
    def is_single_place(self) -> bool:
        return not self.outside and len(self.places) == 1

    def backend(self) -> ZetaBackend:
        if self.outside:
            return ZetaBackend.partial(self.places, self.cutoff)
        if self.is_single_place:
            return ZetaBackend.local(self.places[0])
        raise UnsupportedOrbitException(f"unit function on the product of places {[v.name for v in self.places]}")


def rectangular_orbit(r: int, d: int) -> NilpotentOrbit:
    return NilpotentOrbit.from_partition(Partition.of([r] * d))


def _determinant_coweight(Pt: ParabolicSubgroup, k: int, d: int, r: int) -> Tuple[Fraction, ...]:
    """Pairs with a block-constant lambda to the sum of its first k block values."""
    out = [Fraction(0)] * Pt.n
    for index, block in enumerate(Pt.ordered_blocks):
        value = Fraction(1 if index < k else 0) - Fraction(k, r)
        for a in block:
            out[a] = value / d
    return tuple(out)


def rectangular_family(o: NilpotentOrbit, backend: ZetaBackend, bounds: Optional[List] = None) -> GMFamily:
    """
    c_P(lambda) = prod over k < r of Z_d(d + <w_P^{-1} lambda, varpi_k>) / Z_d(d) for the orbit (r^d).
    """
    if len(o.J) != 1:
        raise UnsupportedOrbitException(f"zeta-ratio family of the non-rectangular orbit {o.partition}")
    r, d = o.r, o.d_of(o.r)

    def _generator(P, direction, order):
        Pt, w = richardson_map(P, o)
        mu = weyl(invert(w), direction)
        jet = one(order)
        for k in range(1, r):
            factor, bound = z_jet(backend, d, d, inner(mu, _determinant_coweight(Pt, k, d, r)), order)
            if bounds is not None:
                bounds.append(bound)
            jet = jet * factor.scale(Fraction(1) / factor[0] if is_rational(factor[0]) else 1 / factor[0])
        return jet

    return GMFamily(M=orbit_levi(o), generator=_generator, label=f"zeta-ratio({r}^{d})")


def _from_surd(surd: SurdSum, backend: ZetaBackend, method: str, bounds: Sequence = ()) -> OrbitalValue:
    return OrbitalValue(
        value=surd.value(),
        backend=backend.name,
        method=method,
        tail_bound=_merge_bounds(bounds),
        exact=surd.to_json() if surd.is_exact else None,
    )


def j_rectangular(r: int, d: int, L: Optional[LeviSubgroup], backend: ZetaBackend) -> OrbitalValue:
    """
    J_L^G(I_M^L(0), 1) for the rectangular orbit (r^d), as v_L^G of the zeta-ratio family.

    Raises:
        ZetaPoleException: when a zeta factor is evaluated at a pole
    """
    o = rectangular_orbit(r, d)
    M = orbit_levi(o)
    L = L or M
    if not levi_contains(L, M):
        raise InvalidParabolicException(L.blocks, f"does not contain the Levi {M.blocks}")
    bounds: List = []
    surd = gm_value_exact(rectangular_family(o, backend, bounds), L, _whole(o.n))
    return _from_surd(surd, backend, "zeta-ratio family", bounds)


def _rank_one_adjacency(sizes: Sequence[int]):
    o = NilpotentOrbit.from_partition(richardson_orbit(sorted(sizes, reverse=True)))
    P1 = parabolics_of(orbit_levi(o))[0]
    return adjacency(P1, ParabolicSubgroup(ordered_blocks=list(reversed(P1.ordered_blocks))), o)


def rank_one_value(sizes: Sequence[int], backend: ZetaBackend) -> OrbitalValue:
    """
    J_M^G((0), 1) in GL(a + b) for M = GL(a) x GL(b): ||alpha^vee|| Z'_{r1}(r1 + r2) / Z_{r1}(r1 + r2).
    """
    data = _rank_one_adjacency(sizes)
    jet, bound = z_jet(backend, data.r1, data.r1 + data.r2, 1, 1)
    ratio = jet[1] / jet[0]
    surd = SurdSum(
        terms={coroot_norm_squared(data.coroot): ratio},
        log_prime=jet.log_prime,
        log_power=1 if jet.log_prime else 0,
    )
    logger.debug("rank one sizes=%s r1=%d r2=%d ratio=%s", list(sizes), data.r1, data.r2, ratio)
    return _from_surd(surd, backend, f"rank one r1={data.r1} r2={data.r2}", [bound])


def _factor_value(sizes: Sequence[int], backend: ZetaBackend, depth: int) -> OrbitalValue:
    if len(sizes) == 1:
        return OrbitalValue(value=Fraction(1), backend=backend.name, method="trivial")
    if len(set(sizes)) == 1:
        return j_rectangular(len(sizes), sizes[0], None, backend)
    if len(sizes) == 2:
        return rank_one_value(sizes, backend)
    o = NilpotentOrbit.from_partition(richardson_orbit(sorted(sizes, reverse=True)))
    if backend.kind == "padic":
        estimate = j_numeric_padic(o, orbit_levi(o), _whole(o.n), backend.prime, depth)
        return OrbitalValue(
            value=estimate.value, backend=backend.name, method="lattice sum", tail_bound=estimate.tail_bound
        )
    if backend.kind == "partial":
        return euler_lattice_value(o, orbit_levi(o), backend, depth)
    raise UnsupportedOrbitException(f"J_M^L for M-blocks {list(sizes)} at {backend.name}")


def levi_sizes_in(M: LeviSubgroup, L: LeviSubgroup) -> List[List[int]]:
    """For each block of L, the sizes of the blocks of M inside it, largest first."""
    return [sorted((len(m) for m in M.blocks if set(m) <= set(block)), reverse=True) for block in L.blocks]


def levi_factorisation(
    M: LeviSubgroup,
    L: LeviSubgroup,
    backend: ZetaBackend,
    depth: int = DEFAULT_DEPTH,
    base: Optional[LeviSubgroup] = None,
) -> OrbitalValue:
    """
    J_B^L(I_M^B(0), 1), B = base. For B = M, the product over the GL factors of L of the factor integrals.
    Otherwise the descent sum over L1 in L^L(M) of d_M^L(L1, B) J_M^{L1}((0), 1).

    Args:
        M: The Levi of the orbit
        L: The Levi the integral lives on
        backend: Where the zeta functions live
        depth: Lattice depth for the factors without a closed form
        base: The Levi B between M and L carrying the weight; M when omitted

    Raises:
        UnsupportedOrbitException: when a factor has neither a closed form nor a numeric path
    """
    base = base or M
    if not levi_contains(L, base) or not levi_contains(base, M):
        raise InvalidParabolicException(L.blocks, f"does not contain {base.blocks} containing {M.blocks}")
    if base != M:
        return _descent_sum(M, L, base, backend, depth)
    factors = [_factor_value(sizes, backend, depth) for sizes in levi_sizes_in(M, L)]
    relevant = [f for f in factors if f.method != "trivial"]
    return OrbitalValue(
        value=_product([f.value for f in factors]),
        backend=backend.name,
        method=" x ".join(f.method for f in relevant) or "trivial",
        tail_bound=_merge_bounds([f.tail_bound for f in factors]),
        exact=relevant[0].exact if len(relevant) == 1 else None,
    )


def _descent_sum(M: LeviSubgroup, L: LeviSubgroup, base: LeviSubgroup, backend: ZetaBackend, depth: int) -> OrbitalValue:
    total, tails, methods = mpmath.mpf(0), [], []
    for L1 in levis_of(M, ambient=L):
        d_sq = splitting(M, L, L1, base)
        if d_sq == 0:
            continue
        d = mpmath.sqrt(to_mpf(d_sq))
        J = levi_factorisation(M, L1, backend, depth)
        total += d * to_mpf(J.value)
        if J.tail_bound != EXACT_TAG:
            tails.append(d * to_mpf(J.tail_bound))
        methods.append(J.method)
        logger.debug("descent L1=%s d^2=%s J=%s", L1.blocks, d_sq, J.value)
    return OrbitalValue(
        value=total,
        backend=backend.name,
        method="descent: " + " + ".join(methods),
        tail_bound=float(sum(tails)) if tails else EXACT_TAG,
    )


def weight_at_point(
    y,
    L: Optional[LeviSubgroup] = None,
    Q: Optional[ParabolicSubgroup] = None,
    places: Sequence[Place] = (),
    g=None,
) -> OrbitalValue:
    """
    v_{L,X}^Q(g) for any g with g^{-1} X g = Y, at one place or summed over several.

    Raises:
        OrbitMembershipException: when Y is not conjugate to the standard nilpotent of its Jordan type
    """
    o = NilpotentOrbit.from_partition(jordan_type(y))
    g = g if g is not None else conjugator_from_X(y, o)
    M = orbit_levi(o)
    L = L or M
    Q = Q or _whole(o.n)
    places = list(places) or [Place(kind="real")]
    if len(places) == 1:
        family = r_family(g, o, places[0])
    else:
        local = [r_family(g, o, v) for v in places]
        points = {}
        for P in parabolics_of(M):
            total = [0.0] * o.n
            for fam in local:
                scale = float(mpmath.log(fam.log_prime)) if fam.log_prime else 1.0
                total = [t + float(x) * scale for t, x in zip(total, fam.points[P])]
            points[P] = tuple(total)
        family = OrthogonalFamily(M=M, points=points)
    surd = gm_value_exact(GMFamily.exponential(family), L, Q)
    name = ",".join(v.name for v in places)
    return OrbitalValue(
        value=surd.value(), backend=name, method="weight", exact=surd.to_json() if surd.is_exact else None
    )


class NumericEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Any
    tail_bound: float
    depth: int
    horizon: int
    strata: int
    unweighted: Fraction  # unweighted mass up to the horizon, normalized by c_X
    converged: bool

    def to_json(self) -> Dict:
        return {
            "value": float(self.value),
            "tail_bound": self.tail_bound,
            "depth": self.depth,
            "horizon": self.horizon,
            "strata": self.strata,
            "unweighted": float(self.unweighted),
            "converged": self.converged,
        }


def sublattice_counts(q: int, d: int, horizon: int) -> List[int]:
    """Number of sublattices of index q^k in Z_q^d, for k = 0..horizon."""
    counts = [1] + [0] * horizon
    for i in range(d):
        factor = q**i
        for k in range(1, horizon + 1):
            counts[k] += factor * counts[k - 1]
    return counts


def _chains(length: int, horizon: int) -> List[Tuple[int, ...]]:
    """Non-increasing sequences of the given length with entries in [0, horizon]."""
    return [tuple(reversed(c)) for c in itertools.combinations_with_replacement(range(horizon + 1), length)]


def _measure_exponents(o: NilpotentOrbit, layout: BasisLayout) -> Dict[Tuple[int, int], int]:
    """Coefficients e_A with vol_o(m) / delta_R(m) = q^{sum e_A v_A}."""
    summands = layout.summands()
    exponents = {A: 0 for A in summands}
    for s, A in enumerate(summands):
        for B in summands[s + 1:]:
            exponents[A] -= o.d_of(B[1])
            exponents[B] += o.d_of(A[1])
    for src, tgt in centralizer(o).o_positions:
        exponents[tgt] += o.d_of(src[1])
        exponents[src] -= o.d_of(tgt[1])
    return exponents


def _direct_point(Pt: ParabolicSubgroup, w: Tuple[int, ...], h: Sequence) -> Tuple:
    return tuple(-x for x in weyl(w, project(h, Pt)))


def _dual_point(dual: ParabolicSubgroup, w: Tuple[int, ...], reversal: Tuple[int, ...], h: Sequence) -> Tuple:
    return weyl(w, weyl(reversal, project(h, dual)))


def lattice_points(o: NilpotentOrbit, parabolics: Sequence[ParabolicSubgroup]) -> Dict[ParabolicSubgroup, Callable]:
    """
    For each P, the map from the chain vector h of g to the point Y_P entering the lattice sum.

    Y_P(g) only depends on the chain of g when R lies in P tilde. When R lies in the dual of P tilde
    instead, Y_P is read at the image of g under g -> J (g^T)^{-1} J, which preserves dg, K and the unit
    function; each P-term of the derivative formula is then a sum over its own chains.

    Raises:
        UnsupportedOrbitException: when neither P tilde nor its dual contains R
    """
    reversal = chain_reversal(o)
    readers = {}
    for P in parabolics:
        Pt, w = richardson_map(P, o)
        if contains_refined_flag(Pt, o):
            readers[P] = functools.partial(_direct_point, Pt, w)
            continue
        dual = dual_parabolic(Pt, o)
        if not contains_refined_flag(dual, o):
            raise UnsupportedOrbitException(f"lattice sum of {o.partition} at the Richardson parabolic {Pt.to_json()}")
        readers[P] = functools.partial(_dual_point, dual, w, reversal)
    return readers


def _shell_tail(shells_abs: Sequence, depth: int):
    """Absolute mass of the shells past the depth, continued geometrically past the last one."""
    explicit = sum(shells_abs[depth + 1:], mpmath.mpf(0))
    last, previous = shells_abs[-1], shells_abs[-2]
    if last == 0:
        return explicit
    if previous > 0 and last < previous:
        ratio = last / previous
        return explicit + last * ratio / (1 - ratio)
    return mpmath.inf


def _lattice_strata(o: NilpotentOrbit, q: int, horizon: int):
    """Yields (shell, h, mass) for the chains with entries up to the horizon and a nonzero mass."""
    layout = BasisLayout.for_orbit(o)
    exponents = _measure_exponents(o, layout)
    counts = {j: sublattice_counts(q, o.d_of(j), horizon) for j in o.J}
    chain_js = [j for j in sorted(o.J) if j > 1]
    for combo in itertools.product(*[_chains(j - 1, horizon) for j in chain_js]):
        v = {A: 0 for A in layout.summands()}
        count = 1
        for j, chain in zip(chain_js, combo):
            full = chain + (0,)
            for i, value in enumerate(chain, start=1):
                v[(i, j)] = value
                count *= counts[j][value - full[i]]
        mass = count * Fraction(q) ** sum(exponents[A] * value for A, value in v.items())
        if mass == 0:
            continue
        h = [Fraction(0)] * o.n
        for (i, j), value in v.items():
            for a in layout.summand(i, j):
                h[a] = Fraction(value, o.d_of(j))
        yield max((c[0] for c in combo), default=0), tuple(h), mass


def j_numeric_padic(
    o: NilpotentOrbit,
    L: Optional[LeviSubgroup],
    Q: Optional[ParabolicSubgroup],
    q: int,
    depth: int = DEFAULT_DEPTH,
    tolerance: Optional[float] = None,
) -> NumericEstimate:
    """
    c_X^{-1} J^Q_{L,X}(1) at the q-adic place, as a sum over lattice chains.

    Modulo M_X, the M_R-part of g = m n k is a chain of lattices O^{d_j} = Λ_j^j ⊆ ... ⊆ Λ_j^1 for each
    j, with v_j^i = log_q [Λ_j^i : O^{d_j}]. Chains are summed by shells of maximal index up to the depth;
    the tail is bounded by exact shell masses up to a larger horizon plus a geometric remainder. Only the
    P in P(M) contained in Q enter the weight.

    Raises:
        UnsupportedOrbitException: when some P inside Q has no lattice reading (see lattice_points)
    """
    M = orbit_levi(o)
    L = L or M
    Q = Q or _whole(o.n)
    weighted = dim_a(L) != dim_a(Q)
    readers = lattice_points(o, [P for P in parabolics_of(M) if is_contained(P, Q)]) if weighted else {}
    horizon = max(TAIL_HORIZON_FACTOR * depth, depth + 2)

    def _weight(h: Tuple):
        if not weighted:
            return mpmath.mpf(1)
        family = OrthogonalFamily(M=M, points={P: read(h) for P, read in readers.items()}, log_prime=q)
        return gm_value_exact(GMFamily.exponential(family), L, Q).value()

    shells_signed = [mpmath.mpf(0)] * (horizon + 1)
    shells_abs = [mpmath.mpf(0)] * (horizon + 1)
    shells_mass = [Fraction(0)] * (horizon + 1)
    strata = 0
    for shell, h, mass in _lattice_strata(o, q, horizon):
        contribution = to_mpf(mass) * _weight(h)
        shells_signed[shell] += contribution
        shells_abs[shell] += abs(contribution)
        shells_mass[shell] += mass
        if shell <= depth:
            strata += 1
    c_x = c_constant(o, ZetaBackend(kind="padic", prime=q)).value.value
    estimate = sum(shells_signed[: depth + 1], mpmath.mpf(0)) / to_mpf(c_x)
    tail = float(_shell_tail(shells_abs, depth) / to_mpf(c_x))
    converged = tolerance is None or tail <= tolerance * max(abs(float(estimate)), 1e-300)
    logger.info("lattice sum %s q=%d depth=%d strata=%d tail bound=%.3e", o.partition, q, depth, strata, tail)
    if not converged:
        logger.warning("depth %d too small: tail bound %.3e exceeds tolerance %s", depth, tail, tolerance)
    return NumericEstimate(
        value=estimate,
        tail_bound=tail,
        depth=depth,
        horizon=horizon,
        strata=strata,
        unweighted=sum(shells_mass, Fraction(0)) / c_x,
        converged=converged,
    )


class LatticeFamily(BaseModel):
    """
    The local family c_P(lambda) = c_X^{-1} J_{P,X}(lambda) at a q-adic place, read off the lattice sum.

    Jets are normalized by the unweighted mass up to the depth, so that c_P(0) = 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    orbit: NilpotentOrbit
    prime: int
    depth: int
    horizon: int
    strata: List[Any]  # (shell, mass, {P: Y_P}) up to the horizon
    mass: Any

    @classmethod
    def build(cls, o: NilpotentOrbit, q: int, depth: int) -> "LatticeFamily":
        readers = lattice_points(o, parabolics_of(orbit_levi(o)))
        horizon = depth + 2
        strata, mass = [], mpmath.mpf(0)
        for shell, h, weight in _lattice_strata(o, q, horizon):
            weight = to_mpf(weight)
            strata.append((shell, weight, {P: read(h) for P, read in readers.items()}))
            if shell <= depth:
                mass += weight
        logger.debug("lattice family %s q=%d depth=%d strata=%d", o.partition, q, depth, len(strata))
        return cls(orbit=o, prime=q, depth=depth, horizon=horizon, strata=strata, mass=mass)

    def jet(self, P: ParabolicSubgroup, direction: Sequence, order: int) -> Tuple[JetValue, List]:
        """
        The jet of t -> c_P(t direction), in natural units, and per order the absolute mass of the
        shells past the depth.
        """
        log_q = mpmath.log(self.prime)
        shells = [[mpmath.mpf(0)] * (order + 1) for _ in range(self.horizon + 1)]
        for shell, mass, points in self.strata:
            slope = to_mpf(inner(direction, points[P])) * log_q
            term = mass
            for i in range(order + 1):
                shells[shell][i] += term if shell <= self.depth else abs(term)
                term = term * slope / (i + 1)
        inside = [sum((row[i] for row in shells[: self.depth + 1]), mpmath.mpf(0)) for i in range(order + 1)]
        beyond = [_shell_tail([row[i] for row in shells], self.depth) for i in range(order + 1)]
        return JetValue(coefficients=tuple(c / self.mass for c in inside)), [b / self.mass for b in beyond]


@functools.lru_cache(maxsize=64)
def _local_family(o: NilpotentOrbit, q: int, depth: int) -> LatticeFamily:
    return LatticeFamily.build(o, q, depth)


def _prime_depth(p: int, depth: int) -> int:
    """Depth at p whose first omitted shell weighs about as much as at 2."""
    return max(1, round(depth * math.log(2) / math.log(p)))


def _euler_log_jet(
    local: Sequence[LatticeFamily],
    P: ParabolicSubgroup,
    direction: Sequence,
    order: int,
    decay: int,
    cutoff: int,
) -> Tuple[JetValue, List]:
    """
    The sum over the primes of the log-jets of c_{P,p}, and a bound for its error at each order.

    The i-th local log-coefficient is at most C_i (log p)^i p^{-decay}; C_i is the largest ratio seen
    below the cutoff and the primes past it add C_i 2 (log c)^i c^{1-decay} / (decay - 1).
    """
    total = JetValue(coefficients=(mpmath.mpf(0),) * (order + 1))
    errors = [mpmath.mpf(0)] * (order + 1)
    constants = [mpmath.mpf(0)] * (order + 1)
    for fam in local:
        jet, beyond = fam.jet(P, direction, order)
        log_jet = jet.log()
        total = total + log_jet
        log_p = mpmath.log(fam.prime)
        for i in range(1, order + 1):
            errors[i] += beyond[i]
            constants[i] = max(constants[i], abs(log_jet[i]) * mpmath.mpf(fam.prime) ** decay / log_p**i)
    c = mpmath.mpf(cutoff)
    for i in range(1, order + 1):
        errors[i] += constants[i] * 2 * mpmath.log(c) ** i * c ** (1 - decay) / (decay - 1)
    return total, errors


@functools.lru_cache(maxsize=64)
def euler_lattice_value(
    o: NilpotentOrbit,
    L: LeviSubgroup,
    backend: ZetaBackend,
    depth: int = DEFAULT_DEPTH,
) -> OrbitalValue:
    """
    J_L^G(I_M^L(0), 1^S) at a partial backend, as v_L^G of the product over the primes p < cutoff outside S
    of the local lattice families.

    The log-jets of the local families add up over the primes; their exponential feeds the derivative
    formula. The tail bound carries the local shells past the depth and the primes past the cutoff
    through the exponential and the theta factors.

    Raises:
        UnsupportedOrbitException: at a backend other than a partial one, or when a local family has no
            lattice sum
        DivergenceException: when some adjacent pair has r2 = 0
    """
    if backend.kind != "partial":
        raise UnsupportedOrbitException(f"Euler product of lattice sums at {backend.name}")
    M = orbit_levi(o)
    if not levi_contains(L, M):
        raise InvalidParabolicException(L.blocks, f"does not contain the Levi {M.blocks}")
    G = _whole(o.n)
    k = dim_a(L) - dim_a(G)
    decay = 1 + min((adjacency(P1, P2, o).r2 for P1, P2 in adjacent_pairs(M)), default=1)
    if decay <= 1:
        raise DivergenceException(f"Euler product of lattice sums for {o.partition}")
    cutoff = backend.cutoff or LATTICE_PRIME_CUTOFF
    primes = [int(p) for p in sympy.primerange(2, cutoff) if p not in backend.S]
    local = [_local_family(o, p, _prime_depth(p, depth)) for p in primes]
    cache: Dict[Tuple, Tuple[JetValue, List]] = {}

    def _summed(P, direction, order):
        key = (P, tuple(direction), order)
        if key not in cache:
            cache[key] = _euler_log_jet(local, P, direction, order, decay, cutoff)
        return cache[key]

    family = GMFamily(M=M, generator=lambda P, direction, order: _summed(P, direction, order)[0].exp(), label="euler")
    lam = generic_direction(L, G)
    value = gm_value_exact(family, L, G, direction=lam).value()
    bound = mpmath.mpf(0)
    for P in parabolics_in(L, G):
        below = next(B for B in parabolics_of(M) if is_contained(B, P))
        log_jet, errors = _summed(below, lam, k)
        majorant = JetValue(coefficients=tuple(abs(c) for c in log_jet.coefficients))
        widened = JetValue(coefficients=tuple(abs(c) + e for c, e in zip(log_jet.coefficients, errors)))
        cov_sq, factor = theta_parts(P, G, lam)
        bound += mpmath.sqrt(to_mpf(cov_sq)) * abs(to_mpf(factor)) * (widened.exp()[k] - majorant.exp()[k])
    logger.info("Euler product of lattice sums %s: %d primes below %d, tail bound %.3e", o.partition, len(primes), cutoff, float(bound))
    return OrbitalValue(
        value=value,
        backend=backend.name,
        method=f"euler product of lattice sums, {len(primes)} primes below {cutoff}",
        tail_bound=float(bound),
    )


def arthur_j(
    o: NilpotentOrbit,
    L: LeviSubgroup,
    f: UnitFunctionSpec,
    depth: int = DEFAULT_DEPTH,
) -> OrbitalValue:
    """
    J_L^G(I_M^L(0), f) = J_{L,X}^G(f) / c_X for the unit function f.

    Raises:
        UnsupportedOrbitException: outside the rectangular closed form, the lattice sums and their
            Euler products
    """
    M = orbit_levi(o)
    if not levi_contains(L, M):
        raise InvalidParabolicException(L.blocks, f"does not contain the Levi {M.blocks}")
    backend = f.backend()
    if dim_a(L) == 1:
        return OrbitalValue(value=Fraction(1), backend=backend.name, method="trivial")
    if len(o.J) == 1:
        return j_rectangular(o.r, o.d_of(o.r), L, backend)
    if backend.kind == "padic":
        estimate = j_numeric_padic(o, L, _whole(o.n), backend.prime, depth)
        return OrbitalValue(
            value=estimate.value, backend=backend.name, method="lattice sum", tail_bound=estimate.tail_bound
        )
    if backend.kind == "partial":
        return euler_lattice_value(o, L, backend, depth)
    raise UnsupportedOrbitException(f"J_L^G for {o.partition} at {backend.name}")


def arthur_j_conjugates(o: NilpotentOrbit, L: LeviSubgroup, f: UnitFunctionSpec, depth: int = DEFAULT_DEPTH) -> Dict[Tuple[int, ...], OrbitalValue]:
    """arthur_j at the conjugates w.L, for w in Norm_W(M)/W^M."""
    return {w: arthur_j(o, weyl(w, L), f, depth) for w in norm_quotient(orbit_levi(o))}


class DescentCheck(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levi: Tuple[Tuple[int, ...], ...]
    parabolic: List[List[int]]
    full_group: OrbitalValue
    levi_level: OrbitalValue
    residual: float
    passed: bool

    def to_json(self) -> Dict:
        return {
            "levi": [list(b) for b in self.levi],
            "parabolic": self.parabolic,
            "full_group": self.full_group.to_json(),
            "levi_level": self.levi_level.to_json(),
            "residual": self.residual,
            "passed": self.passed,
        }


def descent_check(
    o: NilpotentOrbit,
    L: LeviSubgroup,
    Q: ParabolicSubgroup,
    place: Place,
    depth: int = DEFAULT_DEPTH,
    tolerance: float = 1e-2,
) -> DescentCheck:
    """
    Compares c_X^{-1} J^Q_{M,X}(1), computed on the whole group with the Q-weight, with J_M^L((0), 1)
    computed on L.
    """
    if Q.levi != L:
        raise InvalidParabolicException(Q.to_json(), "not in P(L)")
    M = orbit_levi(o)
    backend = ZetaBackend.local(place)
    if len(o.J) == 1:
        bounds: List = []
        surd = gm_value_exact(rectangular_family(o, backend, bounds), M, Q)
        full = _from_surd(surd, backend, "zeta-ratio family", bounds)
    elif place.kind == "padic":
        estimate = j_numeric_padic(o, M, Q, place.prime, depth)
        full = OrbitalValue(
            value=estimate.value, backend=backend.name, method="lattice sum", tail_bound=estimate.tail_bound
        )
    else:
        raise UnsupportedOrbitException(f"descent for {o.partition} at {place.name}")
    local = levi_factorisation(M, L, backend, depth)
    residual = abs(float(full.value) - float(local.value))
    slack = sum(float(b) for b in (full.tail_bound, local.tail_bound) if b != EXACT_TAG)
    passed = residual <= slack + tolerance * max(abs(float(local.value)), 1e-12)
    return DescentCheck(
        levi=L.blocks, parabolic=Q.to_json(), full_group=full, levi_level=local, residual=residual, passed=passed
    )


def reference_levis(M: LeviSubgroup, L: LeviSubgroup) -> List[LeviSubgroup]:
    """The L1 in L^L(T_0) with I_{L1}^L(0) = I_M^L(0): the W^L-conjugates of M."""
    target = levi_sizes_in(M, L)
    torus = LeviSubgroup.torus(M.n)
    return [L1 for L1 in levis_of(torus, ambient=L) if levi_sizes_in(L1, L) == target]


class CoefficientA(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levi: Tuple[Tuple[int, ...], ...]
    value: Optional[float]
    volume: float
    integral: Optional[OrbitalValue]
    reference_spread: Optional[float]
    euler_check: Optional[Dict]
    bound: Optional[float]
    reason: Optional[str] = None

    def to_json(self) -> Dict:
        return {
            "levi": [list(b) for b in self.levi],
            "value": self.value,
            "volume": self.volume,
            "integral": self.integral.to_json() if self.integral else None,
            "reference_spread": self.reference_spread,
            "euler_check": self.euler_check,
            "bound": self.bound,
            "reason": self.reason,
        }


def euler_cross_check(M: LeviSubgroup, L: LeviSubgroup, S: Sequence[Place], cutoff: int) -> Optional[Dict]:
    """
    For a single rank-one factor, J_M^L((0), 1^S) as the sum of the local values over p < cutoff, p not in S.
    """
    sizes = [s for s in levi_sizes_in(M, L) if len(s) > 1]
    if len(sizes) != 1 or len(sizes[0]) != 2:
        return None
    data = _rank_one_adjacency(sizes[0])
    norm = mpmath.sqrt(to_mpf(coroot_norm_squared(data.coroot)))
    excluded = {v.prime for v in S if v.kind == "padic"}
    total = mpmath.mpf(0)
    for p in sympy.primerange(2, cutoff):
        if p in excluded:
            continue
        jet, _ = z_jet(ZetaBackend(kind="padic", prime=int(p)), data.r1, data.r1 + data.r2, 1, 1)
        jet = jet.numeric()
        total += norm * jet[1] / jet[0]
    # each local term is at most 2 r1 log p p^{-s} with s = r2 + 1
    s = data.r2 + 1
    c = mpmath.mpf(cutoff)
    tail = norm * data.r1 * 4 * mpmath.log(c) * c ** (1 - s) / (s - 1) if s > 1 else mpmath.inf
    return {"value": float(total), "cutoff": cutoff, "tail_bound": float(tail), "r1": data.r1, "r2": data.r2}


def coefficient_a(
    o: NilpotentOrbit,
    L: LeviSubgroup,
    S: Sequence[Place],
    cutoff: Optional[int] = None,
    depth: int = DEFAULT_DEPTH,
) -> CoefficientA:
    """
    a^L(S, I_M^L(0)) = vol(L1(Q)\\L1(A)^1) J_{L1}^L((0), 1^S_L), checked over every admissible L1.

    Raises:
        DivergenceException: when the orbit is not simple
        InvalidPlaceException: when S misses the archimedean place
    """
    if not is_simple(o):
        raise DivergenceException(f"a^L(S) for {o.partition}")
    M = orbit_levi(o)
    backend = ZetaBackend.partial(S)
    volume = float(vol_levi(M.sizes).value.value)
    try:
        values = []
        integral = None
        for L1 in reference_levis(M, L):
            J = levi_factorisation(L1, L, backend, depth)
            integral = integral or J
            values.append(float(vol_levi(L1.sizes).value.value) * float(J.value))
    except UnsupportedOrbitException as e:
        return CoefficientA(
            levi=L.blocks, value=None, volume=volume, integral=None, reference_spread=None,
            euler_check=None, bound=None, reason=str(e),
        )
    value = values[0]
    spread = max(values) - min(values)
    euler = euler_cross_check(M, L, S, cutoff) if cutoff else None
    bound = maj_bound(o, L, backend)
    logger.debug("a^L L=%s value=%s spread=%s bound=%s", L.blocks, value, spread, bound)
    return CoefficientA(
        levi=L.blocks, value=value, volume=volume, integral=integral, reference_spread=spread,
        euler_check=euler, bound=bound,
    )


class DevelopmentTerm(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levi: Tuple[Tuple[int, ...], ...]
    orbit: List[str]  # the orbit o_L, one partition per GL factor of L
    weyl_factor: Fraction
    reference_levi: Tuple[Tuple[int, ...], ...]
    induces_ambient: bool
    coefficient: CoefficientA
    integral: str

    def to_json(self) -> Dict:
        return {
            "levi": [list(b) for b in self.levi],
            "orbit": self.orbit,
            "weyl_factor": str(self.weyl_factor),
            "reference_levi": [list(b) for b in self.reference_levi],
            "induces_ambient": self.induces_ambient,
            "coefficient": self.coefficient.to_json(),
            "integral": self.integral,
        }


def development(o: NilpotentOrbit, S: Sequence[Place], cutoff: Optional[int] = None, depth: int = DEFAULT_DEPTH) -> List[DevelopmentTerm]:
    """
    The terms (|W^L|/|W|) a^L(S, o_L) J_L^G(o_L, f_S) of the development of the orbit, one per L in L(M).

    Raises:
        DivergenceException: when the orbit is not simple
    """
    if not is_simple(o):
        raise DivergenceException(f"development of {o.partition}")
    M = orbit_levi(o)
    terms = []
    for L in levis_of(M):
        sizes = levi_sizes_in(M, L)
        partitions = [richardson_orbit(s) for s in sizes]
        induced = induce_orbit([len(b) for b in L.blocks], partitions)
        term = DevelopmentTerm(
            levi=L.blocks,
            orbit=[str(p) for p in partitions],
            weyl_factor=Fraction(weyl_order(L), factorial(o.n)),
            reference_levi=M.blocks,
            induces_ambient=induced == o.partition,
            coefficient=coefficient_a(o, L, S, cutoff, depth),
            integral=f"J_L^G(o_L, f_S) for L = {[list(b) for b in L.blocks]}",
        )
        terms.append(term)
    return terms


class GlobalWeighted(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Optional[float]
    polynomial: Optional[str]
    degree: Optional[int]
    volume: float
    terms: List[Dict]

    def to_json(self) -> Dict:
        return self.model_dump()


def global_weighted_T(o: NilpotentOrbit, T: Sequence, L: Optional[LeviSubgroup] = None, Q: Optional[ParabolicSubgroup] = None) -> GlobalWeighted:
    """
    J^{Q,T}_{L,X} of the orbit for the adelic unit function, with the weight v_L^Q(g, T).

    The weight of the product of the orbit family with T_P splits over (L1, L2) in L^{M_Q}(L): the result is
    vol(M) times the sum of d_L^{M_Q}(L1, L2) v_L^{Q1}(1, T) J_L^{L2}(I_M^L(0), 1), a polynomial in T.
    L defaults to M and Q to G. Terms whose integral has no closed form are reported with a reason and
    leave the value unset.

    Raises:
        DivergenceException: when the orbit is not simple
        InvalidParabolicException: unless M is inside L inside M_Q
    """
    if not is_simple(o):
        raise DivergenceException(f"J^T for {o.partition}")
    M = orbit_levi(o)
    L = L or M
    Q = Q or _whole(o.n)
    if not levi_contains(L, M) or not levi_contains(Q.levi, L):
        raise InvalidParabolicException(Q.to_json(), f"expected {M.blocks} inside {L.blocks} inside its Levi")
    backend = ZetaBackend.completed()
    volume = float(vol_levi(M.sizes).value.value)
    expression, total, complete = sympy.Integer(0), 0.0, True
    records = []
    for term in splitting_terms(L, Q=Q):
        weight = weight_T_polynomial(L, term.Q1, T)
        try:
            J = levi_factorisation(M, term.L2, backend, base=L)
            j_value = float(J.value)
        except UnipotentToolException as e:
            complete = False
            records.append({"L1": [list(b) for b in term.L1.blocks], "L2": [list(b) for b in term.L2.blocks], "reason": str(e)})
            continue
        total += term.coefficient * weight.value * j_value
        expression += sympy.sympify(weight.polynomial) * sympy.Float(term.coefficient * j_value, 17)
        records.append(
            {
                "L1": [list(b) for b in term.L1.blocks],
                "L2": [list(b) for b in term.L2.blocks],
                "splitting": term.coefficient,
                "weight": weight.polynomial,
                "integral": j_value,
            }
        )
    if not complete:
        return GlobalWeighted(value=None, polynomial=None, degree=None, volume=volume, terms=records)
    poly = sympy.expand(expression * sympy.Float(volume, 17))
    symbols = sympy.symbols(f"t1:{o.n + 1}")
    degree = sympy.Poly(poly, *symbols).total_degree() if poly != 0 else 0
    return GlobalWeighted(value=volume * total, polynomial=str(poly), degree=degree, volume=volume, terms=records)
