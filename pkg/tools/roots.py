import itertools
import logging
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import mpmath
from pydantic import BaseModel, ConfigDict, field_validator

from tools.constant import MAX_DIRECTION_ATTEMPTS
from tools.exceptions import InvalidParabolicException, SingularDirectionException
from tools.utils import det, inverse

logger = logging.getLogger(__name__)

Block = Tuple[int, ...]


def _check_blocks(value) -> Tuple[Block, ...]:
    blocks = tuple(tuple(sorted(int(a) for a in block)) for block in value)
    seen = [a for block in blocks for a in block]
    if any(not block for block in blocks):
        raise InvalidParabolicException(value, "blocks must be nonempty")
    if sorted(seen) != list(range(len(seen))):
        raise InvalidParabolicException(value, "blocks must partition {0, ..., n-1}")
    return blocks


class LeviSubgroup(BaseModel):
    model_config = ConfigDict(frozen=True)

    blocks: Tuple[Block, ...]

    @field_validator("blocks", mode="before")
    @classmethod
    def _canonical(cls, value):
        return tuple(sorted(_check_blocks(value)))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def block_of(self, a: int) -> Block:
        return next(b for b in self.blocks if a in b)

    @classmethod
    def standard(cls, sizes: Sequence[int]) -> "LeviSubgroup":
        return cls(blocks=_intervals(sizes))

    @classmethod
    def torus(cls, n: int) -> "LeviSubgroup":
        return cls(blocks=tuple((a,) for a in range(n)))

    @classmethod
    def whole(cls, n: int) -> "LeviSubgroup":
        return cls(blocks=(tuple(range(n)),))


class ParabolicSubgroup(BaseModel):
    """
    Semi-standard parabolic subgroup, stored as the ordered blocks of its flag.

    The k-th step of the flag is spanned by the basis vectors of the first k blocks.
    """

    model_config = ConfigDict(frozen=True)

    ordered_blocks: Tuple[Block, ...]

    @field_validator("ordered_blocks", mode="before")
    @classmethod
    def _valid(cls, value):
        return _check_blocks(value)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.ordered_blocks)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(b) for b in self.ordered_blocks)

    @property
    def levi(self) -> LeviSubgroup:
        return LeviSubgroup(blocks=self.ordered_blocks)

    @property
    def is_standard(self) -> bool:
        return self.ordered_blocks == _intervals(self.sizes)

    def block_index(self, a: int) -> int:
        return next(k for k, b in enumerate(self.ordered_blocks) if a in b)

    def to_json(self) -> List[List[int]]:
        return [[a + 1 for a in block] for block in self.ordered_blocks]

    @classmethod
    def from_json(cls, blocks: Sequence[Sequence[int]]) -> "ParabolicSubgroup":
        return cls(ordered_blocks=[[a - 1 for a in block] for block in blocks])

    @classmethod
    def standard(cls, sizes: Sequence[int]) -> "ParabolicSubgroup":
        return cls(ordered_blocks=_intervals(sizes))


class AVector(BaseModel):
    """
    A vector of a_M, stored with n coordinates constant on the blocks of M.

    When `log_prime` is set, each coordinate c stands for c * log(log_prime).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coordinates: Tuple[Any, ...]
    log_prime: Optional[int] = None

    def __add__(self, other: "AVector") -> "AVector":
        return AVector(coordinates=tuple(x + y for x, y in zip(self.coordinates, other.coordinates)), log_prime=self.log_prime)

    def __sub__(self, other: "AVector") -> "AVector":
        return AVector(coordinates=tuple(x - y for x, y in zip(self.coordinates, other.coordinates)), log_prime=self.log_prime)

    def __neg__(self) -> "AVector":
        return AVector(coordinates=tuple(-x for x in self.coordinates), log_prime=self.log_prime)

    def scale(self, c) -> "AVector":
        return AVector(coordinates=tuple(c * x for x in self.coordinates), log_prime=self.log_prime)

    def as_floats(self) -> Tuple[float, ...]:
        factor = float(mpmath.log(self.log_prime)) if self.log_prime else 1.0
        return tuple(float(x) * factor for x in self.coordinates)


class RootData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    simple_roots: Tuple[Tuple[Block, Block], ...]  # (earlier block, later block) of P
    coroots: Tuple[Tuple[Fraction, ...], ...]
    weights: Tuple[Tuple[Fraction, ...], ...]
    copoids: Tuple[Tuple[Fraction, ...], ...]
    covolume_squared: Fraction


Vector = Union[AVector, Sequence]


def _coords(x: Vector) -> Tuple:
    return tuple(x.coordinates) if isinstance(x, AVector) else tuple(x)


def _intervals(sizes: Sequence[int]) -> Tuple[Block, ...]:
    blocks, start = [], 0
    for size in sizes:
        blocks.append(tuple(range(start, start + size)))
        start += size
    return tuple(blocks)


def inner(x: Vector, y: Vector):
    return sum((a * b for a, b in zip(_coords(x), _coords(y))), Fraction(0))


def project(x: Vector, L: Union[LeviSubgroup, ParabolicSubgroup]) -> Tuple:
    """Orthogonal projection to a_L: averages the coordinates over each block of L."""
    blocks = L.blocks if isinstance(L, LeviSubgroup) else L.ordered_blocks
    x = _coords(x)
    out = list(x)
    for block in blocks:
        mean = sum((x[a] for a in block), Fraction(0)) / len(block)
        for a in block:
            out[a] = mean
    return tuple(out)


def levi_of(P: ParabolicSubgroup) -> LeviSubgroup:
    return P.levi


def is_contained(P: ParabolicSubgroup, Q: ParabolicSubgroup) -> bool:
    """P is contained in Q iff every block of P lies in one block of Q and the Q-index never decreases along P."""
    if P.n != Q.n:
        return False
    last = -1
    for block in P.ordered_blocks:
        indices = {Q.block_index(a) for a in block}
        if len(indices) != 1:
            return False
        k = indices.pop()
        if k < last:
            return False
        last = k
    return True


def levi_contains(L: LeviSubgroup, M: LeviSubgroup) -> bool:
    """M is contained in L."""
    return all(any(set(m) <= set(b) for b in L.blocks) for m in M.blocks)


def _set_partitions(items: List):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        for k in range(len(partition)):
            yield partition[:k] + [[first] + partition[k]] + partition[k + 1:]
        yield [[first]] + partition


def _merge(blocks: Sequence[Block]) -> Block:
    return tuple(sorted(a for b in blocks for a in b))


def parabolics_of(M: LeviSubgroup) -> List[ParabolicSubgroup]:
    """The set P(M) of parabolics with Levi component M."""
    found = {ParabolicSubgroup(ordered_blocks=order) for order in itertools.permutations(M.blocks)}
    return sorted(found, key=lambda P: P.ordered_blocks)


def flags_of(M: LeviSubgroup) -> List[ParabolicSubgroup]:
    """The set F(M) of parabolics containing M, as ordered coarsenings of the blocks of M."""
    found = set()
    for partition in _set_partitions(list(M.blocks)):
        merged = [_merge(part) for part in partition]
        for order in itertools.permutations(merged):
            found.add(ParabolicSubgroup(ordered_blocks=order))
    return sorted(found, key=lambda P: (len(P.ordered_blocks), P.ordered_blocks))


def levis_of(M: LeviSubgroup, ambient: Optional[LeviSubgroup] = None) -> List[LeviSubgroup]:
    """The set L(M) of Levi subgroups containing M, optionally inside an ambient Levi."""
    found = set()
    for partition in _set_partitions(list(M.blocks)):
        L = LeviSubgroup(blocks=[_merge(part) for part in partition])
        if ambient is None or levi_contains(ambient, L):
            found.add(L)
    return sorted(found, key=lambda L: (len(L.blocks), L.blocks))


def enumerate_groups(M: LeviSubgroup, scope: Literal["parabolic", "flag", "levi"]):
    """
    Enumerates P(M), F(M) or L(M) in a deterministic order.

    Args:
        M: The Levi subgroup
        scope: "parabolic" for P(M), "flag" for F(M), "levi" for L(M)

    Returns:
        A sorted list of ParabolicSubgroup or LeviSubgroup
    """
    if scope == "parabolic":
        return parabolics_of(M)
    if scope == "flag":
        return flags_of(M)
    if scope == "levi":
        return levis_of(M)
    raise ValueError(f"Unknown scope {scope!r}")


def parabolics_in(L: LeviSubgroup, Q: ParabolicSubgroup) -> List[ParabolicSubgroup]:
    """P^Q(L): parabolics with Levi L contained in Q."""
    return [P for P in parabolics_of(L) if is_contained(P, Q)]


def flags_in(M: LeviSubgroup, Q: ParabolicSubgroup) -> List[ParabolicSubgroup]:
    """F^Q(M): parabolics containing M and contained in Q."""
    return [R for R in flags_of(M) if is_contained(R, Q)]


def dim_a(L: Union[LeviSubgroup, ParabolicSubgroup]) -> int:
    return len(L.blocks if isinstance(L, LeviSubgroup) else L.ordered_blocks)


def simple_roots(P: ParabolicSubgroup, Q: Optional[ParabolicSubgroup] = None) -> List[Tuple[Block, Block]]:
    """Delta_P^Q as pairs of consecutive P-blocks lying in a common Q-block."""
    pairs = []
    for A, B in zip(P.ordered_blocks, P.ordered_blocks[1:]):
        if Q is None or Q.block_index(A[0]) == Q.block_index(B[0]):
            pairs.append((A, B))
    return pairs


def coroot(n: int, A: Block, B: Block) -> Tuple[Fraction, ...]:
    """Projection of e_a - e_b onto a_P: 1/|A| on A and -1/|B| on B."""
    vec = [Fraction(0)] * n
    for a in A:
        vec[a] = Fraction(1, len(A))
    for b in B:
        vec[b] = Fraction(-1, len(B))
    return tuple(vec)


def coroots(P: ParabolicSubgroup, Q: Optional[ParabolicSubgroup] = None) -> List[Tuple[Fraction, ...]]:
    return [coroot(P.n, A, B) for A, B in simple_roots(P, Q)]


def gram(vectors: Sequence[Sequence]) -> List[List]:
    return [[inner(u, v) for v in vectors] for u in vectors]


def _dual_basis(vectors: List[Tuple[Fraction, ...]]) -> List[Tuple[Fraction, ...]]:
    if not vectors:
        return []
    g_inv = inverse(gram(vectors))
    n = len(vectors[0])
    return [
        tuple(sum((g_inv[i][j] * vectors[j][a] for j in range(len(vectors))), Fraction(0)) for a in range(n))
        for i in range(len(vectors))
    ]


def root_data(P: ParabolicSubgroup, Q: Optional[ParabolicSubgroup] = None) -> RootData:
    if Q is not None and not is_contained(P, Q):
        raise InvalidParabolicException(P.to_json(), "P must be contained in Q")
    pairs = simple_roots(P, Q)
    cor = [coroot(P.n, A, B) for A, B in pairs]
    # roots and coroots are the same vectors of a_P under the standard inner product
    dual = tuple(_dual_basis(cor))
    return RootData(
        simple_roots=tuple(pairs),
        coroots=tuple(cor),
        weights=dual,
        copoids=dual,
        covolume_squared=det(gram(cor)) if cor else Fraction(1),
    )


def theta_parts(P: ParabolicSubgroup, Q: ParabolicSubgroup, lam: Vector) -> Tuple[Fraction, Any]:
    """
    Exact pieces of theta_P^Q(lam).

    Returns:
        (squared covolume, prod <lam, alpha^vee>^{-1}) so that theta = sqrt(first) * second

    Raises:
        SingularDirectionException: when lam vanishes on a coroot
    """
    data = root_data(P, Q)
    factor = Fraction(1)
    for cor in data.coroots:
        pairing = inner(lam, cor)
        if pairing == 0:
            raise SingularDirectionException(_coords(lam))
        factor = factor / pairing
    return data.covolume_squared, factor


def theta(P: ParabolicSubgroup, Q: ParabolicSubgroup, lam: Vector) -> float:
    cov_sq, factor = theta_parts(P, Q, lam)
    return float(mpmath.sqrt(mpmath.mpf(cov_sq.numerator) / cov_sq.denominator) * factor)


def cone_indicator(kind: Literal["tau", "tau_hat"], P: ParabolicSubgroup, Q: ParabolicSubgroup, H: Vector) -> int:
    """Characteristic function of the open cone cut out by Delta_P^Q (tau) or by the weights (tau_hat)."""
    data = root_data(P, Q)
    functionals = data.coroots if kind == "tau" else data.weights
    return int(all(inner(f, H) > 0 for f in functionals))


def weyl(w: Sequence[int], x):
    """
    Action of the permutation w (a -> w[a]).

    On vectors (w.x)_{w(a)} = x_a; on parabolics P -> P^w = w^{-1} P w, whose blocks are the preimages.
    """
    if isinstance(x, ParabolicSubgroup):
        w_inv = invert(w)
        return ParabolicSubgroup(ordered_blocks=[[w_inv[a] for a in block] for block in x.ordered_blocks])
    if isinstance(x, LeviSubgroup):
        w_inv = invert(w)
        return LeviSubgroup(blocks=[[w_inv[a] for a in block] for block in x.blocks])
    coords = _coords(x)
    out = [None] * len(coords)
    for a, value in enumerate(coords):
        out[w[a]] = value
    if isinstance(x, AVector):
        return AVector(coordinates=tuple(out), log_prime=x.log_prime)
    return tuple(out)


def conjugate(w: Sequence[int], P: ParabolicSubgroup) -> ParabolicSubgroup:
    """w P w^{-1}, whose blocks are the images w(block)."""
    return ParabolicSubgroup(ordered_blocks=[[w[a] for a in block] for block in P.ordered_blocks])


def invert(w: Sequence[int]) -> Tuple[int, ...]:
    out = [0] * len(w)
    for a, b in enumerate(w):
        out[b] = a
    return tuple(out)


def compose(u: Sequence[int], v: Sequence[int]) -> Tuple[int, ...]:
    """(u o v)(a) = u(v(a))."""
    return tuple(u[v[a]] for a in range(len(v)))


def weyl_length(w: Sequence[int]) -> int:
    return sum(1 for a in range(len(w)) for b in range(a + 1, len(w)) if w[a] > w[b])


def block_map(source: Sequence[Block], target: Sequence[Block]) -> Tuple[int, ...]:
    """The permutation sending the k-th source block onto the k-th target block, order-preserving inside blocks."""
    n = sum(len(b) for b in source)
    w = [0] * n
    for src, tgt in zip(source, target):
        if len(src) != len(tgt):
            raise InvalidParabolicException([list(source), list(target)], "block sizes differ")
        for a, b in zip(sorted(src), sorted(tgt)):
            w[a] = b
    return tuple(w)


def norm_quotient(M: LeviSubgroup) -> List[Tuple[int, ...]]:
    """Representatives of Norm_W(M)/W^M: permutations of equal-size blocks."""
    reps = set()
    for order in itertools.permutations(M.blocks):
        if all(len(a) == len(b) for a, b in zip(M.blocks, order)):
            reps.add(block_map(M.blocks, order))
    return sorted(reps)


def borel_refinement(P: ParabolicSubgroup) -> ParabolicSubgroup:
    """The Borel subgroup B' contained in P whose order is increasing inside each block of P."""
    return ParabolicSubgroup(ordered_blocks=[(a,) for block in P.ordered_blocks for a in block])


def weyl_element_for(B: ParabolicSubgroup) -> Tuple[int, ...]:
    """The w with B = w B_0 w^{-1} for the standard Borel B_0, that is w(a) = b_a."""
    return tuple(block[0] for block in B.ordered_blocks)


def generic_direction(L: LeviSubgroup, Q: ParabolicSubgroup, attempt: int = 0) -> Tuple[Fraction, ...]:
    """
    Deterministic rational direction of a_L^Q off every singular hyperplane of the theta_P^Q.

    Args:
        L: The Levi subgroup, contained in the Levi of Q
        Q: The parabolic
        attempt: Index of the candidate, so that callers can ask for several directions

    Returns:
        Block-constant coordinates orthogonal to a_Q
    """
    candidates = parabolics_in(L, Q)
    for shift in range(attempt, attempt + MAX_DIRECTION_ATTEMPTS):
        raw = [Fraction(0)] * L.n
        for k, block in enumerate(L.blocks):
            value = Fraction((k + 1) * (k + 2 + shift), 1) + Fraction(1, k + 3 + shift)
            for a in block:
                raw[a] = value
        base = project(raw, L)
        on_q = project(base, Q)
        lam = tuple(x - y for x, y in zip(base, on_q))
        if all(inner(lam, c) != 0 for P in candidates for c in coroots(P, Q)):
            return lam
    raise SingularDirectionException(f"no generic direction for {L.blocks} in {Q.ordered_blocks}")


def coroot_norm_squared(c: Sequence) -> Fraction:
    return inner(c, c)


def weyl_order(L: LeviSubgroup) -> int:
    """|W^L| as the product of the factorials of the block sizes."""
    order = 1
    for size in L.sizes:
        for k in range(2, size + 1):
            order *= k
    return order


def block_values(x: Vector, P: ParabolicSubgroup) -> Dict[int, Any]:
    """Value of a block-constant vector on each block of P, by block index."""
    coords = _coords(x)
    return {k: coords[block[0]] for k, block in enumerate(P.ordered_blocks)}
