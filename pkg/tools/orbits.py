import logging
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from tools.exceptions import InvalidPartitionException
from tools.utils import Matrix, matmul, nullspace, rank, zeros

logger = logging.getLogger(__name__)

Summand = Tuple[int, int]  # (i, j): the summand V_j^i


class Partition(BaseModel):
    model_config = ConfigDict(frozen=True)

    parts: Tuple[int, ...]

    @field_validator("parts", mode="before")
    @classmethod
    def _check_parts(cls, value):
        parts = tuple(int(p) for p in value)
        if any(p <= 0 for p in parts):
            raise InvalidPartitionException(value, "parts must be positive")
        if list(parts) != sorted(parts, reverse=True):
            raise InvalidPartitionException(value, "parts must be weakly decreasing")
        return parts

    @property
    def n(self) -> int:
        return sum(self.parts)

    @classmethod
    def of(cls, parts: Sequence[int]) -> "Partition":
        """Builds a partition from parts given in any order."""
        return cls(parts=tuple(sorted((int(p) for p in parts), reverse=True)))

    @classmethod
    def parse(cls, text: str) -> "Partition":
        return cls.of([int(tok) for tok in text.replace(" ", "").split(",") if tok])

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"


class NilpotentOrbit(BaseModel):
    """
    Jordan data of a nilpotent orbit in gl(n).

    `d[j - 1]` is the number of Jordan blocks of size j, for 1 <= j <= r.
    """

    model_config = ConfigDict(frozen=True)

    partition: Partition
    d: Tuple[int, ...]
    r: int
    J: Tuple[int, ...]
    inv: int

    @classmethod
    def from_partition(cls, partition) -> "NilpotentOrbit":
        if not isinstance(partition, Partition):
            partition = Partition.of(partition)
        r = partition.parts[0] if partition.parts else 0
        d = tuple(partition.parts.count(j) for j in range(1, r + 1))
        J = tuple(j for j in range(1, r + 1) if d[j - 1])
        return cls(partition=partition, d=d, r=r, J=J, inv=len(J))

    @property
    def n(self) -> int:
        return self.partition.n

    def d_of(self, j: int) -> int:
        return self.d[j - 1] if 1 <= j <= self.r else 0


class BasisLayout(BaseModel):
    """Positions of the basis vectors e^i_{k,j}, ordered by (i, -j, k)."""

    model_config = ConfigDict(frozen=True)

    r: int
    positions: Dict[Tuple[int, int, int], int]  # (i, k, j) -> position
    labels: Tuple[Tuple[int, int, int], ...]  # position -> (i, k, j)

    @classmethod
    def for_orbit(cls, o: NilpotentOrbit) -> "BasisLayout":
        labels = sorted(
            ((i, k, j) for j in o.J for i in range(1, j + 1) for k in range(1, o.d_of(j) + 1)),
            key=lambda t: (t[0], -t[2], t[1]),
        )
        return cls(r=o.r, positions={lab: pos for pos, lab in enumerate(labels)}, labels=tuple(labels))

    @property
    def n(self) -> int:
        return len(self.labels)

    def grading(self, i: int, j: int) -> int:
        return (i - 1) * (2 * self.r - i + 2) // 2 + self.r - j + 1

    def summand(self, i: int, j: int) -> List[int]:
        """Positions spanning V_j^i, in increasing k."""
        return [pos for pos, (ii, _, jj) in enumerate(self.labels) if ii == i and jj == j]

    def summands(self) -> List[Summand]:
        seen = []
        for i, _, j in self.labels:
            if (i, j) not in seen:
                seen.append((i, j))
        return seen


class CentralizerDecomposition(BaseModel):
    model_config = ConfigDict(frozen=True)

    levi_blocks: Tuple[int, ...]  # (d_1, ..., d_r): M_X is the product of the GL(d_j)
    dim_levi: int
    dim_unipotent: int
    dim_centralizer: int
    n_positions: Tuple[Tuple[Summand, Summand], ...]  # (source, target) pairs spanning n = n^{>=1}
    o_positions: Tuple[Tuple[Summand, Summand], ...]  # (source, target) pairs spanning o = o^{>=1}

    def filtration(self, layout: BasisLayout, t: int) -> List[Tuple[Summand, Summand]]:
        return filtration_positions(layout, t)


def transpose(p: Partition) -> Partition:
    if not p.parts:
        return p
    return Partition(parts=tuple(sum(1 for q in p.parts if q >= i) for i in range(1, p.parts[0] + 1)))


def partitions(n: int) -> List[Partition]:
    """All partitions of n, largest first part first."""

    def _gen(remaining: int, largest: int):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, largest), 0, -1):
            for rest in _gen(remaining - first, first):
                yield (first,) + rest

    return [Partition(parts=parts) for parts in _gen(n, n)]


def induce_orbit(levi_blocks: Sequence[int], block_orbits: Sequence[Partition]) -> Partition:
    """
    Lusztig-Spaltenstein induction in type A.

    Args:
        levi_blocks: The block sizes of the Levi subgroup
        block_orbits: One partition per block, of the block's size

    Returns:
        The componentwise sum of the zero-padded block partitions
    """
    if len(levi_blocks) != len(block_orbits):
        raise InvalidPartitionException(block_orbits, "one orbit per Levi block is required")
    n = sum(levi_blocks)
    total = [0] * n
    for size, orbit in zip(levi_blocks, block_orbits):
        if not isinstance(orbit, Partition):
            orbit = Partition.of(orbit)
        if orbit.n != size:
            raise InvalidPartitionException(orbit.parts, f"expected a partition of {size}")
        for idx, part in enumerate(orbit.parts):
            total[idx] += part
    return Partition.of([x for x in total if x])


def richardson_orbit(composition: Sequence[int]) -> Partition:
    if any(int(b) <= 0 for b in composition):
        raise InvalidPartitionException(composition, "blocks must be positive")
    return induce_orbit(list(composition), [Partition(parts=(1,) * int(b)) for b in composition])


def is_simple(o: NilpotentOrbit) -> bool:
    return o.inv == o.r


def levi_sizes(o: NilpotentOrbit) -> Tuple[int, ...]:
    """n_i = d_i + ... + d_r for 1 <= i <= r."""
    return tuple(sum(o.d[i - 1:]) for i in range(1, o.r + 1))


def standard_nilpotent(o: NilpotentOrbit) -> Tuple[Matrix, BasisLayout]:
    layout = BasisLayout.for_orbit(o)
    x = zeros(layout.n)
    for (i, k, j), pos in layout.positions.items():
        if i > 1:
            x[layout.positions[(i - 1, k, j)]][pos] = Fraction(1)
    return x, layout


def jordan_type(x: Matrix) -> Partition:
    """
    Jordan type of a nilpotent matrix from the ranks of its powers.

    Raises:
        InvalidPartitionException: when the matrix is not nilpotent
    """
    n = len(x)
    ranks = [n]
    power = [row[:] for row in x]
    while ranks[-1] > 0:
        ranks.append(rank(power))
        if ranks[-1] == ranks[-2]:
            raise InvalidPartitionException(ranks, "matrix is not nilpotent")
        power = matmul(power, x)
    # rank(X^{k-1}) - rank(X^k) counts the blocks of size >= k
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
    return transpose(Partition(parts=tuple(a for a in at_least if a)))


def filtration_positions(layout: BasisLayout, t: int) -> List[Tuple[Summand, Summand]]:
    """Pairs (V_j^i -> V_j'^i') spanning n^{>=t}."""
    summands = layout.summands()
    return [
        (src, tgt)
        for src in summands
        for tgt in summands
        if layout.grading(*src) - layout.grading(*tgt) >= t
    ]


def o_filtration_positions(layout: BasisLayout, t: int) -> List[Tuple[Summand, Summand]]:
    """Pairs spanning o^{>=t}: source V_j^i with i > 1 and p(V_j^{i-1}) - p(target) >= t."""
    summands = layout.summands()
    return [
        (src, tgt)
        for src in summands
        if src[0] > 1
        for tgt in summands
        if layout.grading(src[0] - 1, src[1]) - layout.grading(*tgt) >= t
    ]


def entries_of(layout: BasisLayout, pairs: Sequence[Tuple[Summand, Summand]]) -> List[Tuple[int, int]]:
    """Matrix entries (row, column) covered by Hom(source, target) for the given pairs."""
    entries = []
    for src, tgt in pairs:
        for col in layout.summand(*src):
            for row in layout.summand(*tgt):
                entries.append((row, col))
    return sorted(entries)


def centralizer(o: NilpotentOrbit) -> CentralizerDecomposition:
    layout = BasisLayout.for_orbit(o)
    dim_centralizer = sum(m * m for m in levi_sizes(o))
    dim_levi = sum(dj * dj for dj in o.d)
    return CentralizerDecomposition(
        levi_blocks=o.d,
        dim_levi=dim_levi,
        dim_unipotent=dim_centralizer - dim_levi,
        dim_centralizer=dim_centralizer,
        n_positions=tuple(filtration_positions(layout, 1)),
        o_positions=tuple(o_filtration_positions(layout, 1)),
    )


def commutant_dimension(x: Matrix) -> int:
    """Dimension of {A : AX = XA}, by an exact linear solve."""
    n = len(x)
    equations = []
    for row in range(n):
        for col in range(n):
            eq = [Fraction(0)] * (n * n)
            # (AX - XA)[row][col] = sum_t A[row][t] X[t][col] - X[row][t] A[t][col]
            for t in range(n):
                eq[row * n + t] += x[t][col]
                eq[t * n + col] -= x[row][t]
            equations.append(eq)
    return len(nullspace(equations))
