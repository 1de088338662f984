"""
Constraint-directed packet generation.

For each path the generator first fixes the guard outcomes and arm tags,
narrows every unsigned field to an interval using the single-field comparisons
it finds (path conditions included), then samples values and rejects
assignments that break any remaining condition. Every packet is re-checked
with check_packet before it is returned.
"""

import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from chewspec.constants import (
    DEFAULT_NEGATIVES_PER_CONSTRAINT,
    DEFAULT_POSITIVES,
    ERROR_TEMPLATES,
    MAX_EXTRA_TOTAL_BYTES,
    RETRY_BUDGET,
    STRUCTURAL_MUTATIONS,
    TOTAL_LEN,
)
from chewspec.errors import EvaluationError, GenerationError
from chewspec.packets.checker import check_packet
from chewspec.packets.codec import BitWriter, set_bits
from chewspec.packets.corpus import TestPacket
from chewspec.packets.paths import SpecPath, enumerate_paths
from chewspec.pfs.evaluator import evaluate_expr
from chewspec.pfs.model import (
    BinOp,
    Bytes,
    Constraint,
    Expr,
    FieldRef,
    FormatSpec,
    IntLit,
    Not,
    TotalLen,
    UInt,
    COMPARE_OPS,
    FLIPPED_COMPARE,
    NEGATED_COMPARE,
    expr_refs,
    expr_text,
    uses_total_len,
)
from chewspec.types import Verdict
from chewspec.utils import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class Domain:
    lo: int
    hi: int
    excluded: Set[int] = field(default_factory=set)

    def narrow(self, op: str, value: int) -> None:
        if op == "==":
            self.lo, self.hi = max(self.lo, value), min(self.hi, value)
        elif op == "!=":
            self.excluded.add(value)
        elif op == "<":
            self.hi = min(self.hi, value - 1)
        elif op == "<=":
            self.hi = min(self.hi, value)
        elif op == ">":
            self.lo = max(self.lo, value + 1)
        elif op == ">=":
            self.lo = max(self.lo, value)

    @property
    def empty(self) -> bool:
        if self.lo > self.hi:
            return True
        blocked = sum(1 for v in self.excluded if self.lo <= v <= self.hi)
        return blocked >= self.hi - self.lo + 1

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi and value not in self.excluded

    def sample(self, rng: random.Random) -> int:
        roll = rng.random()
        if roll < 0.125:
            value = self.lo
        elif roll < 0.25:
            value = self.hi
        else:
            value = rng.randint(self.lo, self.hi)
        if value in self.excluded:
            for _ in range(16):
                value = rng.randint(self.lo, self.hi)
                if value not in self.excluded:
                    return value
            allowed = range(self.lo, self.hi + 1)
            value = next(v for v in allowed if v not in self.excluded)
        return value


def substitute_total(expr: Expr, total: int) -> Expr:
    if isinstance(expr, TotalLen):
        return IntLit(total)
    if isinstance(expr, BinOp):
        left = substitute_total(expr.left, total)
        return BinOp(expr.op, left, substitute_total(expr.right, total))
    if isinstance(expr, Not):
        return Not(substitute_total(expr.operand, total))
    return expr


def _normalize(expr: Expr) -> List[Expr]:
    """Conjunct list with negations pushed into comparisons where possible."""
    if isinstance(expr, BinOp) and expr.op == "and":
        return _normalize(expr.left) + _normalize(expr.right)
    if isinstance(expr, Not):
        inner = expr.operand
        if isinstance(inner, Not):
            return _normalize(inner.operand)
        if isinstance(inner, BinOp) and inner.op in COMPARE_OPS:
            return [BinOp(NEGATED_COMPARE[inner.op], inner.left, inner.right)]
        if isinstance(inner, BinOp) and inner.op == "or":
            return _normalize(Not(inner.left)) + _normalize(Not(inner.right))
    return [expr]


def _single_field(expr: Expr) -> Optional[Tuple[str, str, int]]:
    """(name, op, literal) when ``expr`` compares a field or total_len to a literal."""
    if not (isinstance(expr, BinOp) and expr.op in COMPARE_OPS):
        return None

    def subject(e: Expr) -> Optional[str]:
        if isinstance(e, FieldRef):
            return e.name
        if isinstance(e, TotalLen):
            return TOTAL_LEN
        return None

    if subject(expr.left) and isinstance(expr.right, IntLit):
        return subject(expr.left), expr.op, expr.right.value
    if subject(expr.right) and isinstance(expr.left, IntLit):
        return subject(expr.right), FLIPPED_COMPARE[expr.op], expr.left.value
    return None


def _total_len_fixup(conjunct: Expr, free: Set[str]) -> Optional[Tuple[str, Expr]]:
    """(field, expr) when ``conjunct`` pins a free field to a total_len expression."""
    if not (
        isinstance(conjunct, BinOp)
        and conjunct.op == "=="
        and uses_total_len(conjunct)
    ):
        return None
    sides = ((conjunct.left, conjunct.right), (conjunct.right, conjunct.left))
    for lhs, rhs in sides:
        if isinstance(lhs, FieldRef) and lhs.name in free:
            if lhs.name not in expr_refs(rhs):
                return lhs.name, rhs
    return None


@dataclass
class _Plan:
    """A path prepared for sampling under one set of conditions."""

    path: SpecPath
    conditions: List[Expr]
    domains: Dict[str, Domain]
    fixed_total: Optional[int]
    presample_total: bool
    fixups: List[Tuple[str, Expr]]
    blocking: List[str]

    @property
    def feasible(self) -> bool:
        return not self.blocking


class PacketGenerator:
    """Generates packets for one spec; caches paths and their feasibility."""

    def __init__(
        self, spec: FormatSpec, seed: int = 0, retry_budget: int = RETRY_BUDGET
    ):
        self.spec = spec
        self.seed = seed
        self.retry_budget = retry_budget
        self.paths = enumerate_paths(spec)
        self.infeasible: Dict[int, List[str]] = {}
        self.skipped: Dict[str, str] = {}
        self.failures: Counter = Counter()
        self._positives: Dict[int, TestPacket] = {}
        self._plans: Dict[int, _Plan] = {}

    # planning

    def plan(self, path: SpecPath, target: Optional[Constraint] = None) -> _Plan:
        """Conditions and narrowed domains for ``path``.

        With a target, its negation replaces it and every other constraint on
        the path still has to hold.
        """
        if target is None and path.index in self._plans:
            return self._plans[path.index]
        declared = path.constraints() + list(self.spec.constraints)
        conditions = [
            s.condition for s in path.steps if s.origin in ("guard", "select")
        ]
        if target is None:
            conditions += [c.expr for c in declared]
        else:
            others = [c for c in declared if c.id != target.id]
            conditions += [c.expr for c in others] + [Not(target.expr)]

        widths = {f.name: f.type.bits for f in path.fields if isinstance(f.type, UInt)}
        fixed_bits = sum(f.fixed_bits or 0 for f in path.fields)
        is_fixed = all(f.fixed_bits is not None for f in path.fields)
        fixed_total = fixed_bits // 8 if is_fixed else None
        if fixed_total is not None:
            conditions = [substitute_total(c, fixed_total) for c in conditions]

        domains = {name: Domain(0, (1 << bits) - 1) for name, bits in widths.items()}
        low = fixed_bits // 8
        domains[TOTAL_LEN] = Domain(low, low + MAX_EXTRA_TOTAL_BYTES)
        blocking: List[str] = []
        for cond in conditions:
            for conjunct in _normalize(cond):
                single = _single_field(conjunct)
                if single and single[0] in domains:
                    name, op, value = single
                    domains[name].narrow(op, value)
                    if domains[name].empty and not blocking:
                        blocking = [
                            expr_text(c)
                            for c in conditions
                            if name in expr_refs(c)
                            or (name == TOTAL_LEN and uses_total_len(c))
                        ]

        presample = fixed_total is None and any(
            isinstance(f.type, Bytes) and uses_total_len(f.type.length)
            for f in path.fields
        )
        structural: Set[str] = set()
        for f in path.fields:
            if isinstance(f.type, Bytes):
                structural |= expr_refs(f.type.length)
        for step in path.steps:
            if step.origin in ("guard", "select"):
                structural |= expr_refs(step.condition)
        fixups: List[Tuple[str, Expr]] = []
        if fixed_total is None:
            free = set(widths) - structural
            for cond in conditions:
                for conjunct in _normalize(cond):
                    fixup = _total_len_fixup(conjunct, free)
                    if fixup is not None:
                        fixups.append(fixup)
        plan = _Plan(
            path, conditions, domains, fixed_total, presample, fixups, blocking
        )
        if target is None:
            self._plans[path.index] = plan
        return plan

    # sampling

    def attempt(
        self, plan: _Plan, rng: random.Random, clamp: bool = False
    ) -> Optional[bytes]:
        """One sampling attempt; the encoded packet, or None when a condition fails."""
        ints: Dict[str, int] = {}
        values: List[Tuple[str, object]] = []
        total = plan.fixed_total
        if plan.presample_total:
            total = plan.domains[TOTAL_LEN].sample(rng)
        size_bits = 0
        for fdef in plan.path.fields:
            if isinstance(fdef.type, UInt):
                value = plan.domains[fdef.name].sample(rng)
                ints[fdef.name] = value
                values.append((fdef.name, value))
                size_bits += fdef.type.bits
            else:
                try:
                    length = int(
                        evaluate_expr(fdef.type.length, ints, total, fdef.name)
                    )
                except EvaluationError:
                    return None
                if length < 0:
                    if not clamp:
                        return None
                    length = 0
                values.append((fdef.name, rng.randbytes(length)))
                size_bits += 8 * length
        actual = size_bits // 8
        if total is not None and total != actual:
            return None
        for name, expr in plan.fixups:
            try:
                wanted = int(evaluate_expr(expr, ints, actual))
            except EvaluationError:
                continue
            if wanted in plan.domains[name]:
                ints[name] = wanted
        for cond in plan.conditions:
            try:
                ok = evaluate_expr(cond, ints, actual)
            except EvaluationError:
                ok = False
            if not ok:
                self.failures[expr_text(cond)] += 1
                return None
        writer = BitWriter()
        for (name, value), fdef in zip(values, plan.path.fields):
            if isinstance(fdef.type, UInt):
                writer.write_uint(ints[name], fdef.type.bits)
            else:
                writer.write_bytes(value)  # type: ignore[arg-type]
        return writer.to_bytes()

    def sample(
        self, plan: _Plan, rng: random.Random, budget: int, clamp: bool = False
    ) -> Optional[bytes]:
        if not plan.feasible:
            return None
        for _ in range(budget):
            data = self.attempt(plan, rng, clamp)
            if data is not None:
                return data
        return None

    def feasible_paths(self) -> List[SpecPath]:
        return [p for p in self.paths if p.index not in self.infeasible]

    def positive(self, index: int) -> TestPacket:
        """The index-th positive packet; paths are visited round-robin."""
        if index in self._positives:
            return self._positives[index]
        packet_seed = derive_seed(self.seed, "positive", index)
        rng = random.Random(packet_seed)
        while True:
            paths = self.feasible_paths()
            if not paths:
                blocking = sorted(
                    {c for reasons in self.infeasible.values() for c in reasons}
                )
                message = ERROR_TEMPLATES["unsatisfiable"].format(
                    spec=self.spec.name, budget=self.retry_budget
                )
                logger.error(f"{message}; blocking: {blocking}")
                raise GenerationError(
                    f"{message}; blocking constraints: {', '.join(blocking)}", blocking
                )
            path = paths[index % len(paths)]
            plan = self.plan(path)
            self.failures.clear()
            data = self.sample(plan, rng, self.retry_budget)
            if data is not None:
                result = check_packet(self.spec, data)
                if result.accepted:
                    packet = TestPacket(
                        index, data, Verdict.ACCEPT, seed=packet_seed, path=path.label
                    )
                    self._positives[index] = packet
                    return packet
                logger.warning(
                    f"Generated positive on {path.label} was rejected: {result.detail}"
                )
                data = None
            reasons = plan.blocking or [c for c, _ in self.failures.most_common(3)]
            logger.warning(
                f"Path {path.label} of '{self.spec.name}' looks unsatisfiable: "
                f"{reasons}"
            )
            self.infeasible[path.index] = reasons

    def targets(self) -> List[Constraint]:
        seen: Dict[str, Constraint] = {}
        for _, _, c in self.spec.iter_constraints():
            seen.setdefault(c.id, c)
        return list(seen.values())

    def negative_for(
        self, target: Constraint, packet_id: int, salt: int
    ) -> Optional[TestPacket]:
        packet_seed = derive_seed(self.seed, "negative", target.id, salt)
        rng = random.Random(packet_seed)
        is_global = any(c.id == target.id for c in self.spec.constraints)
        candidates = [
            p
            for p in self.paths
            if is_global or any(c.id == target.id for c in p.constraints())
        ]
        if not candidates:
            return None
        per_plan = max(50, self.retry_budget // len(candidates))
        for path in candidates:
            plan = self.plan(path, target)
            data = self.sample(plan, rng, per_plan, clamp=True)
            if data is None:
                continue
            result = check_packet(self.spec, data)
            failed = result.failed_constraint
            if result.verdict == Verdict.REJECT and failed == target.id:
                return TestPacket(
                    packet_id,
                    data,
                    Verdict.REJECT,
                    target_constraint=target.id,
                    seed=packet_seed,
                    path=path.label,
                )
            logger.debug(
                f"Negative for '{target.text}' failed elsewhere: {result.detail}"
            )
        return None

    def structural(
        self, mutation: str, packet_id: int, base_index: int
    ) -> Optional[TestPacket]:
        base = self.positive(base_index)
        data = base.data
        if mutation == "truncate":
            if not data:
                return None
            mutated = data[:-1]
        elif mutation == "extend":
            mutated = data + b"\x00"
        else:
            mutated = self._corrupt_length(data)
            if mutated is None:
                return None
        result = check_packet(self.spec, mutated)
        if result.verdict != Verdict.REJECT:
            logger.debug(
                f"Mutation {mutation} of positive {base_index} is still accepted"
            )
            return None
        return TestPacket(
            packet_id,
            mutated,
            Verdict.REJECT,
            mutation=mutation,
            seed=base.seed,
            path=base.path,
        )

    def _corrupt_length(self, data: bytes) -> Optional[bytes]:
        result = check_packet(self.spec, data)
        length_refs: Set[str] = set()
        for _, fdef in self.spec.iter_fields():
            if isinstance(fdef.type, Bytes):
                length_refs |= expr_refs(fdef.type.length)
            for c in fdef.constraints:
                if uses_total_len(c.expr):
                    length_refs |= c.refs
        for c in self.spec.constraints:
            if uses_total_len(c.expr):
                length_refs |= c.refs
        for entry in result.layout:
            value = result.decoded.get(entry.name)
            if entry.name in length_refs and isinstance(value, int):
                for delta in (1, -1):
                    wrapped = (value + delta) % (1 << entry.width)
                    corrupted = set_bits(data, entry.offset, entry.width, wrapped)
                    if check_packet(self.spec, corrupted).verdict == Verdict.REJECT:
                        return corrupted
        return None


def generate_positive(
    spec: FormatSpec, seed: int = 0, n: int = DEFAULT_POSITIVES
) -> List[TestPacket]:
    """Exactly ``n`` accepted packets, deterministic for ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    generator = PacketGenerator(spec, seed)
    packets = [generator.positive(i) for i in range(n)]
    logger.info(f"Generated {len(packets)} positives for '{spec.name}'")
    return packets


def generate_negative(
    spec: FormatSpec,
    seed: int = 0,
    n: Optional[int] = None,
    start_id: int = 0,
    generator: Optional[PacketGenerator] = None,
) -> List[TestPacket]:
    """Up to ``n`` rejected packets, constraint violations before structural mutations.

    ``n`` defaults to one packet per constraint plus one per mutation. Targets
    that cannot be violated alone are skipped and listed in ``generator.skipped``.
    """
    generator = generator or PacketGenerator(spec, seed)
    pool: List[object] = list(generator.targets()) + list(STRUCTURAL_MUTATIONS)
    if n is None:
        n = len(pool)
    packets: List[TestPacket] = []
    uses: Counter = Counter()
    cursor = 0
    while len(packets) < n and pool:
        item = pool[cursor % len(pool)]
        key = item.id if isinstance(item, Constraint) else item
        packet_id = start_id + len(packets)
        if isinstance(item, Constraint):
            packet = generator.negative_for(item, packet_id, uses[key])
            reason = "not individually negatable"
        else:
            try:
                packet = generator.structural(item, packet_id, uses[key])
            except GenerationError as exc:
                packet, reason = None, str(exc)
            else:
                reason = "mutation does not change the verdict"
        if packet is None:
            label = item.text if isinstance(item, Constraint) else item
            logger.warning(
                f"Skipping negative target '{label}' of '{spec.name}': {reason}"
            )
            generator.skipped[str(key)] = reason
            pool.remove(item)
            continue
        uses[key] += 1
        packets.append(packet)
        cursor += 1
    skipped = len(generator.skipped)
    logger.info(
        f"Generated {len(packets)} negatives for '{spec.name}' ({skipped} skipped)"
    )
    return packets


def generate_corpus(
    spec: FormatSpec,
    seed: int = 0,
    positives: int = DEFAULT_POSITIVES,
    negatives_per_constraint: int = DEFAULT_NEGATIVES_PER_CONSTRAINT,
    retry_budget: int = RETRY_BUDGET,
) -> List[TestPacket]:
    """Positives, then negatives, with consecutive ids as the semantic check expects."""
    generator = PacketGenerator(spec, seed, retry_budget)
    packets = [generator.positive(i) for i in range(positives)]
    kinds = len(generator.targets()) + len(STRUCTURAL_MUTATIONS)
    packets += generate_negative(
        spec,
        seed,
        negatives_per_constraint * kinds,
        start_id=positives,
        generator=generator,
    )
    return packets
