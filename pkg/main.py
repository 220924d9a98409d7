import argparse
import json
import logging
import math
import random
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath

from config.settings import configure_logging
from config.suites import GM_SUITES, run_suites
from tools.constant import DEFAULT_DEPTH, DEFAULT_PRIME_CUTOFF, FAMILY_RELATIVE_TOLERANCE, JSON_FLOAT_DIGITS, SCHEMA_VERSION
from tools.exceptions import UnipotentToolException
from tools.gmfam import GMFamily, gm_value_exact, hull_volume
from tools.localfield import Place, r_family, random_unipotent_perturbation, solve_in_N, u13_logdet
from tools.orbital import development, j_numeric_padic, j_rectangular, rectangular_orbit
from tools.orbits import NilpotentOrbit, Partition, is_simple, levi_sizes, partitions, standard_nilpotent
from tools.richardson import (
    adjacency,
    epsilon_count,
    epsilon_set,
    fiber_sizes,
    ls_set,
    orbit_levi,
    richardson_set,
    richardson_table,
)
from tools.roots import LeviSubgroup, ParabolicSubgroup, levis_of, norm_quotient
from tools.utils import format_matrix, inverse, matmul, parse_matrix
from tools.zeta import ZetaBackend, c_constant, parse_places, verify_volume_identity, vol_levi

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

Report = Tuple[Dict[str, Any], List[Dict[str, Any]]]


def _blocks(L) -> List[List[int]]:
    blocks = L.blocks if isinstance(L, LeviSubgroup) else L.ordered_blocks
    return [[a + 1 for a in block] for block in blocks]


def _whole(n: int) -> ParabolicSubgroup:
    return ParabolicSubgroup(ordered_blocks=[tuple(range(n))])


def orbits_report(n: int) -> Report:
    """Orbit table of gl(n): Jordan data, simplicity, Richardson Levi, counts and the constant c_X."""
    records, failures = [], []
    for partition in partitions(n):
        o = NilpotentOrbit.from_partition(partition)
        expected = epsilon_count(o)
        identity = verify_volume_identity(o)
        record = {
            "partition": str(partition),
            "d": list(o.d),
            "inv": o.inv,
            "simple": is_simple(o),
            "levi_sizes": list(levi_sizes(o)),
            "richardson_levi": _blocks(orbit_levi(o)),
            "epsilon_count": len(epsilon_set(o)),
            "richardson_count": len(richardson_set(o)),
            "volume_identity": identity.holds,
        }
        if is_simple(o):
            record["c_global"] = c_constant(o, ZetaBackend.completed()).to_json()
        else:
            record["c_global"] = "divergent"
        if record["epsilon_count"] != expected or record["richardson_count"] != expected:
            failures.append({"check": "richardson count", "partition": str(partition), "expected": expected})
        if not identity.holds:
            failures.append({"check": "volume identity", "partition": str(partition)})
        records.append(record)
    return {"n": n, "orbits": records}, failures


def richardson_report(partition: Partition) -> Report:
    o = NilpotentOrbit.from_partition(partition)
    M = orbit_levi(o)
    expected = len(norm_quotient(M))
    fibers = fiber_sizes(o)
    failures = []
    if any(size != expected for size in fibers.values()):
        failures.append({"check": "fiber sizes", "expected": expected, "found": sorted(set(fibers.values()))})
    table = richardson_table(o)
    if (len(fibers) == len(table)) != is_simple(o):
        failures.append({"check": "bijectivity", "simple": is_simple(o)})
    if len(fibers) != len(epsilon_set(o)):
        failures.append({"check": "E(X) size", "expected": len(epsilon_set(o)), "found": len(fibers)})
    document = {
        "partition": str(partition),
        "levi": _blocks(M),
        "epsilon": [eps.to_json() for eps in epsilon_set(o)],
        "parabolics": table,
        "fibers": [{"richardson": [[a + 1 for a in b] for b in key], "size": size} for key, size in sorted(fibers.items())],
        "norm_quotient": expected,
        "ls_count": len(ls_set(o)),
    }
    return document, failures


def weights_report(g, partition: Partition, place: Place) -> Report:
    """
    The family (-R_P(g)) for Y = g^{-1} X g, its orthogonality, the wall multiples against log|det U_{1,3}|
    and the values v_L^G.
    """
    o = NilpotentOrbit.from_partition(partition)
    if len(g) != o.n:
        raise UnipotentToolException(f"matrix of size {len(g)} for an orbit of gl({o.n})")
    x, _ = standard_nilpotent(o)
    y = matmul(matmul(inverse(g), x), g)
    family = r_family(g, o, place)
    failures = []
    orthogonal = family.is_orthogonal()
    if not orthogonal:
        failures.append({"check": "orthogonality"})
    walls = []
    for P1, P2, multiple, _ in family.adjacency_multiples():
        logdet = u13_logdet(y, P1, P2, o, place, g)
        if logdet.is_exact:
            agrees = Fraction(multiple) == logdet.coefficient
        else:
            agrees = abs(float(multiple) - logdet.to_float()) <= FAMILY_RELATIVE_TOLERANCE * max(1.0, abs(logdet.to_float()))
        if not agrees:
            failures.append({"check": "wall multiple", "P1": _blocks(P1), "P2": _blocks(P2)})
        walls.append(
            {
                "P1": _blocks(P1),
                "P2": _blocks(P2),
                "multiple": multiple,
                "r1": adjacency(P1, P2, o).r1,
                "log_det_u13": logdet.to_json(),
                "agrees": agrees,
            }
        )
    values = []
    fam = GMFamily.exponential(family)
    for L in levis_of(orbit_levi(o)):
        surd = gm_value_exact(fam, L, _whole(o.n))
        values.append({"levi": _blocks(L), "value": surd.to_json(), "backend": place.name})
    document = {
        "partition": str(partition),
        "place": place.name,
        "g": format_matrix(g),
        "family": family.to_json(),
        "orthogonal": orthogonal,
        "positive": family.is_positive(),
        "hull_volume": hull_volume(family).value if family.is_positive() else None,
        "walls": walls,
        "values": values,
    }
    return document, failures


def gm_check_report(n: int, trials: int, seed: int, suites: Optional[Sequence[str]] = None) -> Report:
    results = run_suites(n, trials, seed, list(suites) if suites else None)
    failures = [{"check": r.name, "failures": r.failures} for r in results if not r.passed]
    return {"n": n, "trials": trials, "seed": seed, "suites": [r.to_json() for r in results]}, failures


def local_j_report(r: int, d: int, place: Place, depth: int = DEFAULT_DEPTH) -> Report:
    """The values J_L^G for the rectangular orbit (r^d) and, at a p-adic place, the lattice-sum oracle."""
    o = rectangular_orbit(r, d)
    backend = ZetaBackend.local(place)
    M = orbit_levi(o)
    table = [{"levi": _blocks(L), **j_rectangular(r, d, L, backend).to_json()} for L in levis_of(M)]
    failures: List[Dict] = []
    document: Dict[str, Any] = {
        "partition": str(o.partition),
        "place": place.name,
        "table": table,
        "c_x": c_constant(o, backend).to_json(),
    }
    if place.kind != "padic":
        return document, failures
    q = place.prime
    closed = j_rectangular(r, d, M, backend)
    estimate = j_numeric_padic(o, M, _whole(o.n), q, depth)
    residual = abs(float(closed.value) - float(estimate.value))
    allowed = max(estimate.tail_bound, 1e-2 * abs(float(closed.value)))
    if residual > allowed:
        failures.append({"check": "lattice sum", "residual": residual, "allowed": allowed})
    document["oracle"] = {**estimate.to_json(), "closed_form": closed.to_float(), "residual": residual}
    if (r, d) == (2, 1):
        expected = -mpmath.sqrt(2) * mpmath.log(q) / (q - 1)
        gap = float(abs(mpmath.mpf(closed.value) - expected))
        document["gl2"] = {"expected": float(expected), "residual": gap}
        if gap > 1e-12:
            failures.append({"check": "GL(2) closed form", "residual": gap})
    return document, failures


def coefficients_report(partition: Partition, S: Sequence[Place], cutoff: int, depth: int = DEFAULT_DEPTH) -> Report:
    """The a^L table and the development of a simple orbit outside S."""
    o = NilpotentOrbit.from_partition(partition)
    M = orbit_levi(o)
    terms = development(o, S, cutoff, depth)
    failures = []
    volume = float(vol_levi(M.sizes).value.value)
    for term in terms:
        a = term.coefficient
        if a.value is None:
            continue
        if LeviSubgroup(blocks=term.levi) == M and abs(a.value - volume) > 1e-12 * volume:
            failures.append({"check": "a^M = vol(M)", "value": a.value, "volume": volume})
        if a.reference_spread is not None and a.reference_spread > FAMILY_RELATIVE_TOLERANCE:
            failures.append({"check": "L1 independence", "levi": _blocks(LeviSubgroup(blocks=term.levi)), "spread": a.reference_spread})
        if a.bound is not None and abs(a.value) > a.bound * (1 + FAMILY_RELATIVE_TOLERANCE):
            failures.append({"check": "coefficient bound", "value": a.value, "bound": a.bound})
        if a.euler_check and a.integral is not None:
            gap = abs(a.euler_check["value"] - a.integral.to_float())
            if gap > a.euler_check["tail_bound"] + FAMILY_RELATIVE_TOLERANCE:
                failures.append({"check": "Euler product", "gap": gap, "tail_bound": a.euler_check["tail_bound"]})
    document = {
        "partition": str(partition),
        "S": [v.name for v in S],
        "cutoff": cutoff,
        "volume": volume,
        "development": [term.to_json() for term in terms],
    }
    return document, failures


def solve_conjugator_report(partition: Partition, trials: int, seed: int) -> Report:
    o = NilpotentOrbit.from_partition(partition)
    rng = random.Random(seed)
    failures = []
    for trial in range(trials):
        _, y = random_unipotent_perturbation(o, rng)
        try:
            solve_in_N(y, o)
        except UnipotentToolException as e:
            failures.append({"check": "solve_in_N", "trial": trial, "error": str(e)})
    return {"partition": str(partition), "trials": trials, "seed": seed, "solved": trials - len(failures)}, failures


def _encode(value, floats: List[str]):
    """JSON-ready structure with floats replaced by placeholders for fixed-precision rendering."""
    if isinstance(value, dict):
        return {str(k): _encode(v, floats) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v, floats) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    number = float(value)
    if not math.isfinite(number):
        return str(number)
    floats.append(format(number, f".{JSON_FLOAT_DIGITS}g"))
    return f"\u0000{len(floats) - 1}\u0000"


def render(document: Dict) -> str:
    floats: List[str] = []
    text = json.dumps(_encode(document, floats), sort_keys=True, indent=2)
    for index, literal in enumerate(floats):
        text = text.replace(f'"\\u0000{index}\\u0000"', literal, 1)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uwo", description="Unipotent weighted orbital integrals for GL(n)")
    parser.add_argument("--output", help="write the JSON document to this file instead of stdout")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbits", help="orbit table of gl(n)")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("richardson", help="E(X), the Richardson parabolics and w_P")
    p.add_argument("--partition", type=Partition.parse, required=True)

    p = sub.add_parser("weights", help="the R_P family of g and its weights")
    p.add_argument("--g", type=parse_matrix, required=True)
    p.add_argument("--place", type=Place.parse, required=True)
    p.add_argument("--partition", type=Partition.parse, required=True)

    p = sub.add_parser("gm-check", help="randomized (G,M)-family suites")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--suite", action="append", choices=[s.name for s in GM_SUITES])

    p = sub.add_parser("local-j", help="local weighted integrals of a rectangular orbit")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--place", type=Place.parse, required=True)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)

    p = sub.add_parser("coefficients", help="global coefficients and the development of a simple orbit")
    p.add_argument("--partition", type=Partition.parse, required=True)
    p.add_argument("--S", dest="S", type=parse_places, required=True)
    p.add_argument("--cutoff", type=int, default=DEFAULT_PRIME_CUTOFF)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)

    p = sub.add_parser("solve-conjugator", help="solve n^{-1} X n = Y on random unipotent perturbations")
    p.add_argument("--partition", type=Partition.parse, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    return parser


def dispatch(args: argparse.Namespace) -> Report:
    if args.command == "orbits":
        return orbits_report(args.n)
    if args.command == "richardson":
        return richardson_report(args.partition)
    if args.command == "weights":
        return weights_report(args.g, args.partition, args.place)
    if args.command == "gm-check":
        return gm_check_report(args.n, args.trials, args.seed, args.suite)
    if args.command == "local-j":
        return local_j_report(args.r, args.d, args.place, args.depth)
    if args.command == "coefficients":
        return coefficients_report(args.partition, args.S, args.cutoff, args.depth)
    return solve_conjugator_report(args.partition, args.trials, args.seed)


def _arguments(args: argparse.Namespace) -> Dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("output", "log_level"):
            continue
        if isinstance(value, Partition):
            value = str(value)
        elif isinstance(value, Place):
            value = value.name
        elif key == "S":
            value = [v.name for v in value]
        elif key == "g":
            value = format_matrix(value)
        out[key] = value
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except (UnipotentToolException, ValueError) as e:
        sys.stderr.write(render({"failures": [{"error": type(e).__name__, "message": str(e)}]}) + "\n")
        return EXIT_ERROR
    configure_logging(args.log_level)
    status = EXIT_OK
    try:
        document, failures = dispatch(args)
        if failures:
            status = EXIT_CHECK_FAILED
    except (UnipotentToolException, ValueError, ArithmeticError) as e:
        logger.error("%s failed: %s", args.command, e)
        document, failures = {}, [{"error": type(e).__name__, "message": str(e)}]
        status = EXIT_ERROR
    document.update(
        {
            "schema_version": SCHEMA_VERSION,
            "provenance": {"command": args.command, "arguments": _arguments(args)},
            "failures": failures,
        }
    )
    text = render(document)
    if args.output:
        with open(args.output, "w") as handle:
            handle.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return status


if __name__ == "__main__":
    sys.exit(run())
