"""
Small-domain decision procedures for constraints.

Domains of at most 2**EXHAUSTIVE_LIMIT_BITS joint assignments are enumerated
completely. Larger domains are sampled: per-variable boundary values
{0, 1, max-1, max} first, then SAMPLE_COUNT pseudo-random assignments from a
fixed seed, so results are reproducible.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterator, List, Mapping, Sequence, Tuple, Union

from chewspec.constants import (
    EXHAUSTIVE_LIMIT_BITS,
    SAMPLE_COUNT,
    TOTAL_LEN,
    TOTAL_LEN_DOMAIN_BITS,
)
from chewspec.pfs.evaluator import compile_expr
from chewspec.pfs.model import Constraint, uses_total_len
from chewspec.pfs.parser import parse_constraint

logger = logging.getLogger(__name__)

Assignment = Dict[str, int]
Variable = Tuple[str, int]
Predicate = Callable[[Assignment], bool]

MAX_BOUNDARY_COMBINATIONS = 4096
SAMPLING_SEED = 0x5EED


class Relation(str, Enum):
    EQUIVALENT = "equivalent"
    C1_IMPLIES_C2 = "c1_implies_c2"
    C2_IMPLIES_C1 = "c2_implies_c1"
    INCOMPARABLE = "incomparable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EquivalenceResult:
    relation: Relation
    exhaustive: bool
    # "c1_not_c2": c1 holds and c2 does not; "c2_not_c1" the reverse.
    counterexamples: Dict[str, Assignment] = field(default_factory=dict)


@dataclass
class ImplicationResult:
    implied: bool
    exhaustive: bool
    premise_satisfiable: bool = False
    conclusion_satisfiable: bool = False
    jointly_satisfiable: bool = False
    counterexamples: List[Assignment] = field(default_factory=list)

    @property
    def conflict(self) -> bool:
        both = self.premise_satisfiable and self.conclusion_satisfiable
        return both and not self.jointly_satisfiable


def _boundaries(bits: int) -> List[int]:
    top = (1 << bits) - 1
    return sorted({v for v in (0, 1, top - 1, top) if 0 <= v <= top})


def iter_assignments(
    variables: Sequence[Variable], seed: int = SAMPLING_SEED
) -> Tuple[Iterator[Assignment], bool]:
    """All assignments of ``variables`` when few enough, else a reproducible sample.

    Returns the iterator and whether it is exhaustive.
    """
    names = [name for name, _ in variables]
    total_bits = sum(bits for _, bits in variables)
    if total_bits <= EXHAUSTIVE_LIMIT_BITS:
        ranges = [range(1 << bits) for _, bits in variables]
        return (dict(zip(names, combo)) for combo in itertools.product(*ranges)), True

    def sampled() -> Iterator[Assignment]:
        rng = random.Random(seed)
        edges = [_boundaries(bits) for _, bits in variables]
        combinations = 1
        for values in edges:
            combinations *= len(values)
        if combinations <= MAX_BOUNDARY_COMBINATIONS:
            for combo in itertools.product(*edges):
                yield dict(zip(names, combo))
        else:
            for index, (name, _) in enumerate(variables):
                for value in edges[index]:
                    assignment = {n: rng.getrandbits(b) for n, b in variables}
                    assignment[name] = value
                    yield assignment
        for _ in range(SAMPLE_COUNT):
            yield {n: rng.getrandbits(b) for n, b in variables}

    logger.debug(f"Sampling {total_bits}-bit domain over {names}")
    return sampled(), False


def check_implication(
    premises: Sequence[Predicate],
    conclusion: Predicate,
    variables: Sequence[Variable],
    max_counterexamples: int = 8,
) -> ImplicationResult:
    """Does the conjunction of ``premises`` imply ``conclusion`` over ``variables``?"""
    assignments, exhaustive = iter_assignments(variables)
    result = ImplicationResult(implied=True, exhaustive=exhaustive)
    for assignment in assignments:
        premise = all(p(assignment) for p in premises)
        holds = conclusion(assignment)
        result.premise_satisfiable |= premise
        result.conclusion_satisfiable |= holds
        result.jointly_satisfiable |= premise and holds
        if premise and not holds:
            result.implied = False
            if len(result.counterexamples) < max_counterexamples:
                result.counterexamples.append(assignment)
    return result


def _as_constraint(c: Union[Constraint, str]) -> Constraint:
    return parse_constraint(c) if isinstance(c, str) else c


def constraint_predicate(c: Constraint) -> Predicate:
    fn = compile_expr(c.expr)
    return lambda a: bool(fn(a, a.get(TOTAL_LEN)))


def constraints_equivalent(
    c1: Union[Constraint, str],
    c2: Union[Constraint, str],
    widths: Mapping[str, int],
    total_len_bits: int = TOTAL_LEN_DOMAIN_BITS,
) -> EquivalenceResult:
    """Relation between two constraints over fields of the given bit widths."""
    c1, c2 = _as_constraint(c1), _as_constraint(c2)
    if c1.text == c2.text:
        return EquivalenceResult(Relation.EQUIVALENT, exhaustive=True)
    names = sorted(c1.refs | c2.refs)
    missing = [n for n in names if n not in widths]
    if missing:
        raise ValueError(f"No width given for {', '.join(missing)}")
    variables: List[Variable] = [(n, widths[n]) for n in names]
    if uses_total_len(c1.expr) or uses_total_len(c2.expr):
        variables.append((TOTAL_LEN, total_len_bits))

    p1, p2 = constraint_predicate(c1), constraint_predicate(c2)
    assignments, exhaustive = iter_assignments(variables)
    counterexamples: Dict[str, Assignment] = {}
    for assignment in assignments:
        v1, v2 = p1(assignment), p2(assignment)
        if v1 and not v2:
            counterexamples.setdefault("c1_not_c2", assignment)
        elif v2 and not v1:
            counterexamples.setdefault("c2_not_c1", assignment)
        if len(counterexamples) == 2:
            break
    forward = "c1_not_c2" not in counterexamples
    backward = "c2_not_c1" not in counterexamples
    if forward and backward:
        relation = Relation.EQUIVALENT
    elif forward:
        relation = Relation.C1_IMPLIES_C2
    elif backward:
        relation = Relation.C2_IMPLIES_C1
    else:
        relation = Relation.INCOMPARABLE
    mode = "exhaustive" if exhaustive else "sampled"
    logger.debug(f"'{c1.text}' vs '{c2.text}': {relation} ({mode})")
    return EquivalenceResult(relation, exhaustive, counterexamples)
