import itertools
import logging
import random
from fractions import Fraction
from textwrap import dedent
from typing import Callable, Dict, FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict

from tools.constant import FAMILY_RELATIVE_TOLERANCE, RECOLLEMENT_TOLERANCE
from tools.exceptions import BoundaryPointException
from tools.gmfam import (
    GMFamily,
    OrthogonalFamily,
    alternating_sum,
    gm_value,
    hull_indicator,
    hull_volume,
    recollement_defect,
    splitting_expansion,
)
from tools.roots import Block, LeviSubgroup, ParabolicSubgroup, parabolics_of

logger = logging.getLogger(__name__)


class SuiteResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    trials: int
    worst_residual: float
    skipped: int = 0
    failures: List[Dict] = []

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> Dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "worst_residual": self.worst_residual,
            "skipped": self.skipped,
            "failures": self.failures,
            "passed": self.passed,
        }


class Suite(BaseModel):
    """A named verification suite: runner(n, trials, rng) -> SuiteResult."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    description: str
    expected_output: str
    runner: Callable[[int, int, random.Random], SuiteResult]

    def run(self, n: int, trials: int, seed: int) -> SuiteResult:
        logger.info("suite %s started: n=%d trials=%d seed=%d", self.name, n, trials, seed)
        result = self.runner(n, trials, random.Random(seed))
        logger.info("suite %s finished: passed=%s worst=%.3e", self.name, result.passed, result.worst_residual)
        return result


def random_levi(n: int, rng: random.Random) -> LeviSubgroup:
    """A semi-standard Levi with a random composition of n and a random placement of the indices."""
    indices = list(range(n))
    rng.shuffle(indices)
    blocks, start = [], 0
    while start < n:
        size = rng.randint(1, n - start)
        blocks.append(tuple(sorted(indices[start:start + size])))
        start += size
    return LeviSubgroup(blocks=blocks)


def _random_rational(rng: random.Random, bound: int = 20) -> Fraction:
    return Fraction(rng.randint(-bound * 7, bound * 7), 7)


def random_submodular(M: LeviSubgroup, rng: random.Random) -> Callable[[FrozenSet[Block]], Fraction]:
    """
    f(S) = sum of a modular part over S, minus positive pair weights inside S, minus cubes of positive
    block measures of S. Every term but the modular one is strictly submodular.
    """
    modular = {B: _random_rational(rng) for B in M.blocks}
    pairs = {frozenset(pair): Fraction(rng.randint(1, 40), 7) for pair in itertools.combinations(M.blocks, 2)}
    measures = [{B: Fraction(rng.randint(1, 5)) for B in M.blocks} for _ in range(rng.randint(1, 2))]

    def _f(S: FrozenSet[Block]) -> Fraction:
        value = sum((modular[B] for B in S), Fraction(0))
        value -= sum((w for pair, w in pairs.items() if pair <= S), Fraction(0))
        for mu in measures:
            value -= sum((mu[B] for B in S), Fraction(0)) ** 3 / 49
        return value

    return _f


def submodular_family(M: LeviSubgroup, f: Callable[[FrozenSet[Block]], Fraction]) -> OrthogonalFamily:
    """
    Y_P takes the value (f(S_k) - f(S_{k-1})) / |B_k| on the k-th block B_k of P, S_k the union of the first
    k blocks. Swapping adjacent blocks A, B after S moves Y_P by f(S) + f(S A B) - f(S A) - f(S B) times the
    coroot, so f strictly submodular gives a positive family.
    """
    points = {}
    for P in parabolics_of(M):
        y = [Fraction(0)] * M.n
        seen: FrozenSet[Block] = frozenset()
        for B in P.ordered_blocks:
            step = (f(seen | {B}) - f(seen)) / len(B)
            for a in B:
                y[a] = step
            seen = seen | {B}
        points[P] = tuple(y)
    return OrthogonalFamily(M=M, points=points)


def random_positive_family(M: LeviSubgroup, rng: random.Random) -> OrthogonalFamily:
    """The positive family of a random strictly submodular function on the unions of blocks of M."""
    return submodular_family(M, random_submodular(M, rng))


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def _whole(n: int) -> ParabolicSubgroup:
    return ParabolicSubgroup(ordered_blocks=[tuple(range(n))])


def _volume_suite(n: int, trials: int, rng: random.Random) -> SuiteResult:
    worst, failures = 0.0, []
    for trial in range(trials):
        M = random_levi(n, rng)
        family = random_positive_family(M, rng)
        lhs = gm_value(GMFamily.exponential(family), M, _whole(n))
        rhs = hull_volume(family).value
        residual = _relative(lhs, rhs)
        worst = max(worst, residual)
        if residual > FAMILY_RELATIVE_TOLERANCE:
            failures.append({"trial": trial, "levi": [list(b) for b in M.blocks], "gm_value": lhs, "hull_volume": rhs})
    return SuiteResult(name="volume", trials=trials, worst_residual=worst, failures=failures)


def _indicator_suite(n: int, trials: int, rng: random.Random) -> SuiteResult:
    worst, failures, skipped = 0.0, [], 0
    for trial in range(trials):
        M = random_levi(n, rng)
        family = random_positive_family(M, rng)
        H = [_random_rational(rng) for _ in range(n)]
        try:
            geometric = hull_indicator(family, H)
            combinatorial = alternating_sum(family, H)
        except BoundaryPointException:
            skipped += 1
            continue
        if geometric != combinatorial:
            worst = 1.0
            failures.append({"trial": trial, "H": [str(h) for h in H], "hull": geometric, "alternating": combinatorial})
    return SuiteResult(name="indicator", trials=trials, worst_residual=worst, skipped=skipped, failures=failures)


def _splitting_suite(n: int, trials: int, rng: random.Random) -> SuiteResult:
    worst, failures = 0.0, []
    for trial in range(trials):
        M = random_levi(n, rng)
        c = GMFamily.exponential(random_positive_family(M, rng))
        d = GMFamily.exponential(random_positive_family(M, rng))
        lhs, rhs = splitting_expansion(c, d)
        residual = _relative(lhs, rhs)
        worst = max(worst, residual)
        if residual > FAMILY_RELATIVE_TOLERANCE:
            failures.append({"trial": trial, "levi": [list(b) for b in M.blocks], "lhs": lhs, "rhs": rhs})
    return SuiteResult(name="splitting", trials=trials, worst_residual=worst, failures=failures)


def _recollement_suite(n: int, trials: int, rng: random.Random) -> SuiteResult:
    worst, failures = 0.0, []
    for trial in range(trials):
        M = random_levi(n, rng)
        defect = recollement_defect(GMFamily.exponential(random_positive_family(M, rng)), order=2, attempt=trial % 3)
        worst = max(worst, defect)
        if defect > RECOLLEMENT_TOLERANCE:
            failures.append({"trial": trial, "levi": [list(b) for b in M.blocks], "defect": defect})
    return SuiteResult(name="recollement", trials=trials, worst_residual=worst, failures=failures)


volume_suite = Suite(
    name="volume",
    description=dedent("Compare v_M^G of exp(<lambda, Y_P>) with the volume of the convex hull of a positive family"),
    expected_output=dedent("Relative residuals below the family tolerance"),
    runner=_volume_suite,
)

indicator_suite = Suite(
    name="indicator",
    description=dedent("Compare hull membership with the alternating sum of tau_hat over F(M) at random points"),
    expected_output=dedent("Identical integers at every point off the boundary"),
    runner=_indicator_suite,
)

splitting_suite = Suite(
    name="splitting",
    description=dedent("Check v_M(c d) against the sum of d_M^G(L1, L2) v_M^{Q1}(c) v_M^{Q2}(d)"),
    expected_output=dedent("Relative residuals below the family tolerance"),
    runner=_splitting_suite,
)

recollement_suite = Suite(
    name="recollement",
    description=dedent("Match the jets of adjacent c_P on their common wall"),
    expected_output=dedent("Jet differences below the recollement tolerance"),
    runner=_recollement_suite,
)

GM_SUITES = [volume_suite, indicator_suite, splitting_suite, recollement_suite]


def run_suites(n: int, trials: int, seed: int, names: Optional[List[str]] = None) -> List[SuiteResult]:
    chosen = [s for s in GM_SUITES if names is None or s.name in names]
    return [suite.run(n, trials, seed) for suite in chosen]
