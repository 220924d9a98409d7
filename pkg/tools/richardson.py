import itertools
import logging
from math import factorial
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from tools.exceptions import InvalidParabolicException
from tools.orbits import BasisLayout, NilpotentOrbit, standard_nilpotent
from tools.roots import (
    LeviSubgroup,
    ParabolicSubgroup,
    block_map,
    coroot,
    is_contained,
    parabolics_of,
    weyl,
)
from tools.utils import Matrix

logger = logging.getLogger(__name__)


class EpsilonMap(BaseModel):
    """
    A 0/1 matrix eps[k][c] for the rows k = 1..r and the columns j = J[c].

    Column j has exactly j ones and each row is nondecreasing in j.
    """

    model_config = ConfigDict(frozen=True)

    J: Tuple[int, ...]
    rows: Tuple[Tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check(self):
        for c, j in enumerate(self.J):
            if sum(row[c] for row in self.rows) != j:
                raise InvalidParabolicException(self.rows, f"column {j} must contain {j} ones")
        for row in self.rows:
            if any(a > b for a, b in zip(row, row[1:])):
                raise InvalidParabolicException(self.rows, "rows must be nondecreasing in j")
        return self

    @property
    def r(self) -> int:
        return len(self.rows)

    def alpha(self, k: int, c: int) -> int:
        """Number of ones among rows 1..k (1-based) of column J[c]."""
        return sum(self.rows[l][c] for l in range(k))

    def swap(self, k: int) -> "EpsilonMap":
        """The matrix with rows k and k+1 (1-based) exchanged."""
        rows = list(self.rows)
        rows[k - 1], rows[k] = rows[k], rows[k - 1]
        return EpsilonMap(J=self.J, rows=tuple(rows))

    def to_json(self) -> Dict:
        return {"J": list(self.J), "rows": [list(row) for row in self.rows]}


class AdjacencyData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    P1: ParabolicSubgroup
    P2: ParabolicSubgroup
    Q: ParabolicSubgroup
    k: int  # 1-based index of the exchanged flag step
    epsilon: EpsilonMap  # oriented so that row k <= row k+1
    tau: Tuple[int, int]
    J1: Tuple[int, ...]
    J2: Tuple[int, ...]
    r1: int
    r2: int
    W1: Tuple[int, ...]
    W2: Tuple[int, ...]
    W3: Tuple[int, ...]
    coroot: Tuple
    refined: ParabolicSubgroup  # the flag (..., W1, W2, W3, ...) refining both Richardson images


def _gaps(o: NilpotentOrbit) -> List[int]:
    previous, gaps = 0, []
    for j in o.J:
        gaps.append(j - previous)
        previous = j
    return gaps


def epsilon_count(o: NilpotentOrbit) -> int:
    count = factorial(o.r)
    for g in _gaps(o):
        count //= factorial(g)
    return count


def epsilon_set(o: NilpotentOrbit) -> List[EpsilonMap]:
    """All matrices of E(X), enumerated as nested supports S_j, |S_j| = j, S_j inside S_j' for j < j'."""
    if o.r == 0:
        return []
    chains = [[frozenset(range(o.r))]]
    for j in reversed(o.J[:-1]):
        extended = []
        for chain in chains:
            for subset in itertools.combinations(sorted(chain[-1]), j):
                extended.append(chain + [frozenset(subset)])
        chains = extended
    result = []
    for chain in chains:
        supports = list(reversed(chain))  # aligned with J
        rows = tuple(tuple(int(k in s) for s in supports) for k in range(o.r))
        result.append(EpsilonMap(J=o.J, rows=rows))
    return sorted(result, key=lambda e: e.rows, reverse=True)


def kernel_epsilon(o: NilpotentOrbit) -> EpsilonMap:
    """xi: eps[k][j] = 1 iff k <= j, giving the flag of iterated kernels."""
    return EpsilonMap(J=o.J, rows=tuple(tuple(int(k <= j) for j in o.J) for k in range(1, o.r + 1)))


def image_epsilon(o: NilpotentOrbit) -> EpsilonMap:
    """xi tilde: eps[k][j] = 1 iff k > r - j, giving the flag of iterated images."""
    return EpsilonMap(J=o.J, rows=tuple(tuple(int(k > o.r - j) for j in o.J) for k in range(1, o.r + 1)))


def epsilon_blocks(eps: EpsilonMap, layout: BasisLayout) -> List[Tuple[int, ...]]:
    blocks = []
    for k in range(1, eps.r + 1):
        block = []
        for c, j in enumerate(eps.J):
            if eps.rows[k - 1][c]:
                block.extend(layout.summand(eps.alpha(k, c), j))
        blocks.append(tuple(sorted(block)))
    return blocks


def epsilon_to_parabolic(eps: EpsilonMap, layout: BasisLayout) -> ParabolicSubgroup:
    """
    The semi-standard parabolic stabilising the flag E(eps).

    Args:
        eps: A matrix of E(X)
        layout: The basis layout of the standard nilpotent X

    Returns:
        The parabolic whose k-th block is spanned by the V_j^{alpha(k,j)} with eps[k][j] = 1
    """
    if eps.r != layout.r:
        raise InvalidParabolicException(eps.rows, f"expected {layout.r} rows")
    return ParabolicSubgroup(ordered_blocks=epsilon_blocks(eps, layout))


def in_nilradical(x: Matrix, P: ParabolicSubgroup) -> bool:
    """X lies in n_P: every nonzero entry maps a block of P into a strictly earlier one."""
    index = {a: P.block_index(a) for a in range(P.n)}
    return all(x[row][col] == 0 or index[row] < index[col] for row in range(len(x)) for col in range(len(x)))


def orbit_levi(o: NilpotentOrbit) -> LeviSubgroup:
    """The Levi M of the kernel-flag parabolic: the i-th block spans the V_j^i for all j >= i."""
    layout = BasisLayout.for_orbit(o)
    return LeviSubgroup(blocks=epsilon_blocks(kernel_epsilon(o), layout))


def kernel_parabolic(o: NilpotentOrbit) -> ParabolicSubgroup:
    return epsilon_to_parabolic(kernel_epsilon(o), BasisLayout.for_orbit(o))


def refined_parabolic(o: NilpotentOrbit) -> ParabolicSubgroup:
    """The parabolic R whose blocks are the summands V_j^i in increasing grading."""
    layout = BasisLayout.for_orbit(o)
    summands = sorted(layout.summands(), key=lambda s: layout.grading(*s))
    return ParabolicSubgroup(ordered_blocks=[layout.summand(i, j) for i, j in summands])


def contains_refined_flag(P: ParabolicSubgroup, o: NilpotentOrbit) -> bool:
    return is_contained(refined_parabolic(o), P)


def chain_reversal(o: NilpotentOrbit) -> Tuple[int, ...]:
    """The permutation e^i_{k,j} -> e^{j+1-i}_{k,j}; conjugating the transpose of X by it gives X back."""
    layout = BasisLayout.for_orbit(o)
    return tuple(layout.positions[(j + 1 - i, k, j)] for i, k, j in layout.labels)


def dual_parabolic(P: ParabolicSubgroup, o: NilpotentOrbit) -> ParabolicSubgroup:
    """
    Image of P under the involution g -> J (g^T)^{-1} J of GL(n), J the chain reversal.

    The involution fixes K and sends X to -X; on E(X) it reverses the rows of eps.
    """
    reversal = chain_reversal(o)
    return ParabolicSubgroup(
        ordered_blocks=[tuple(sorted(reversal[a] for a in block)) for block in reversed(P.ordered_blocks)]
    )


def richardson_set(o: NilpotentOrbit) -> List[ParabolicSubgroup]:
    layout = BasisLayout.for_orbit(o)
    return [epsilon_to_parabolic(e, layout) for e in epsilon_set(o)]


def ls_set(o: NilpotentOrbit) -> List[ParabolicSubgroup]:
    """LS(X): every parabolic containing a member of R(X), i.e. merges of consecutive blocks."""
    found = set()
    for P in richardson_set(o):
        blocks = P.ordered_blocks
        for cuts in itertools.product([False, True], repeat=max(len(blocks) - 1, 0)):
            merged, current = [], list(blocks[0])
            for block, cut in zip(blocks[1:], cuts):
                if cut:
                    merged.append(current)
                    current = list(block)
                else:
                    current.extend(block)
            merged.append(current)
            found.add(ParabolicSubgroup(ordered_blocks=merged))
    return sorted(found, key=lambda Q: (len(Q.ordered_blocks), Q.ordered_blocks))


def _richardson_parabolic(P: ParabolicSubgroup, o: NilpotentOrbit) -> Tuple[ParabolicSubgroup, Tuple[int, ...]]:
    M = orbit_levi(o)
    if P.levi != M:
        raise InvalidParabolicException(P.to_json(), "not in P(M) for the Levi attached to the orbit")
    matches = [Pt for Pt in richardson_set(o) if Pt.sizes == P.sizes]
    if len(matches) != 1:
        raise InvalidParabolicException(P.to_json(), f"{len(matches)} Richardson parabolics share its block sizes")
    target = matches[0]
    w = block_map(target.ordered_blocks, P.ordered_blocks)
    return target, w


def richardson_map(P: ParabolicSubgroup, o: NilpotentOrbit) -> Tuple[ParabolicSubgroup, Tuple[int, ...]]:
    """
    The Richardson parabolic conjugate to P, and the permutation w_P with w_P^{-1} P w_P = P tilde.

    P may lie in P(M) or in F(M); in the latter case w_Q = w_P for the first P in P(M) contained in Q.
    w_P is the order-preserving block map, the shortest element of its coset W^{M_P} w_P.

    Raises:
        InvalidParabolicException: when P does not contain M
    """
    M = orbit_levi(o)
    if P.levi == M:
        return _richardson_parabolic(P, o)
    below = next((B for B in parabolics_of(M) if is_contained(B, P)), None)
    if below is None:
        raise InvalidParabolicException(P.to_json(), "does not contain the Levi attached to the orbit")
    _, w = _richardson_parabolic(below, o)
    return weyl(w, P), w


def adjacent_index(P1: ParabolicSubgroup, P2: ParabolicSubgroup) -> int:
    """1-based k such that P2 is P1 with blocks k and k+1 exchanged."""
    b1, b2 = P1.ordered_blocks, P2.ordered_blocks
    if len(b1) != len(b2) or P1.levi != P2.levi:
        raise InvalidParabolicException([P1.to_json(), P2.to_json()], "not adjacent")
    diff = [k for k in range(len(b1)) if b1[k] != b2[k]]
    if len(diff) != 2 or diff[1] != diff[0] + 1 or b1[diff[0]] != b2[diff[1]] or b1[diff[1]] != b2[diff[0]]:
        raise InvalidParabolicException([P1.to_json(), P2.to_json()], "not adjacent")
    return diff[0] + 1


def adjacent_pairs(M: LeviSubgroup) -> List[Tuple[ParabolicSubgroup, ParabolicSubgroup]]:
    pairs = []
    for P in parabolics_of(M):
        blocks = list(P.ordered_blocks)
        for k in range(len(blocks) - 1):
            swapped = blocks[:k] + [blocks[k + 1], blocks[k]] + blocks[k + 2:]
            pairs.append((P, ParabolicSubgroup(ordered_blocks=swapped)))
    return pairs


def _epsilon_of(Pt: ParabolicSubgroup, o: NilpotentOrbit) -> EpsilonMap:
    layout = BasisLayout.for_orbit(o)
    return next(e for e in epsilon_set(o) if epsilon_to_parabolic(e, layout) == Pt)


def adjacency(P1: ParabolicSubgroup, P2: ParabolicSubgroup, o: NilpotentOrbit) -> AdjacencyData:
    k = adjacent_index(P1, P2)
    layout = BasisLayout.for_orbit(o)
    P1t, _ = richardson_map(P1, o)
    eps = _epsilon_of(P1t, o)
    if any(a > b for a, b in zip(eps.rows[k - 1], eps.rows[k])):
        eps = eps.swap(k)
    low, high = eps.rows[k - 1], eps.rows[k]
    J1 = tuple(j for c, j in enumerate(eps.J) if low[c] and high[c])
    J2 = tuple(j for c, j in enumerate(eps.J) if not low[c] and high[c])
    column = {j: c for c, j in enumerate(eps.J)}

    def _span(js, shift):
        return tuple(sorted(pos for j in js for pos in layout.summand(eps.alpha(k - 1, column[j]) + shift, j)))

    W1, W2, W3 = _span(J1, 1), _span(J2, 1), _span(J1, 2)
    blocks = epsilon_blocks(eps, layout)
    refined = blocks[: k - 1] + [b for b in (W1, W2, W3) if b] + blocks[k + 1:]
    data = AdjacencyData(
        P1=P1,
        P2=P2,
        Q=minimal_common(P1, P2),
        k=k,
        epsilon=eps,
        tau=(k, k + 1),
        J1=J1,
        J2=J2,
        r1=sum(o.d_of(j) for j in J1),
        r2=sum(o.d_of(j) for j in J2),
        W1=W1,
        W2=W2,
        W3=W3,
        coroot=coroot(P1.n, P1.ordered_blocks[k - 1], P1.ordered_blocks[k]),
        refined=ParabolicSubgroup(ordered_blocks=refined),
    )
    logger.debug("adjacency k=%d J1=%s J2=%s r1=%d r2=%d", k, J1, J2, data.r1, data.r2)
    return data


def fiber_sizes(o: NilpotentOrbit) -> Dict[Tuple[Tuple[int, ...], ...], int]:
    """Number of P in P(M) over each member of R(X)."""
    counts: Dict[Tuple[Tuple[int, ...], ...], int] = {}
    for P in parabolics_of(orbit_levi(o)):
        Pt, _ = richardson_map(P, o)
        counts[Pt.ordered_blocks] = counts.get(Pt.ordered_blocks, 0) + 1
    return counts


def richardson_table(o: NilpotentOrbit) -> List[Dict]:
    """JSON records {epsilon, parabolic, w} for every P in P(M); w in 1-based one-line notation."""
    x, layout = standard_nilpotent(o)
    records = []
    for P in parabolics_of(orbit_levi(o)):
        Pt, w = richardson_map(P, o)
        records.append(
            {
                "parabolic": P.to_json(),
                "richardson": Pt.to_json(),
                "epsilon": _epsilon_of(Pt, o).to_json(),
                "w": [b + 1 for b in w],
                "x_in_nilradical": in_nilradical(x, Pt),
            }
        )
    return records


def minimal_common(P1: ParabolicSubgroup, P2: ParabolicSubgroup) -> Optional[ParabolicSubgroup]:
    try:
        k = adjacent_index(P1, P2)
    except InvalidParabolicException:
        return None
    blocks = list(P1.ordered_blocks)
    return ParabolicSubgroup(ordered_blocks=blocks[: k - 1] + [blocks[k - 1] + blocks[k]] + blocks[k + 1:])
