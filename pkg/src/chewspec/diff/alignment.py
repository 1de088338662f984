"""
Offset-based alignment of two FormatSpecs.

Each block of a spec becomes a scope. Inside a scope, every fixed-width field
gets a position ``(segment, offset)``: the number of variable-size elements
(sub-sections and computed-length byte arrays) passed so far, and the bit
offset since the last one. Fields of the two specs are grouped by sweeping
overlapping bit intervals within each segment; names never take part.
Sub-sections at the same position correspond when their guards are equivalent
(conditionals) or their discriminators are aligned (variants, arm by tag).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from chewspec.constants import TOTAL_LEN, TOTAL_LEN_DOMAIN_BITS
from chewspec.diff.equivalence import Assignment, check_implication
from chewspec.pfs.evaluator import compile_expr
from chewspec.pfs.model import (
    Bytes,
    Conditional,
    Constraint,
    FieldDef,
    FormatSpec,
    PathLabel,
    Record,
    Section,
    Variant,
    uses_total_len,
)

logger = logging.getLogger(__name__)

ScopeKey = Tuple[str, ...]


@dataclass(frozen=True)
class Element:
    """A field or sub-section placed inside a scope."""

    segment: int
    offset: int
    width: Optional[int] = None
    field: Optional[FieldDef] = None
    section: Optional[Section] = None

    @property
    def position(self) -> str:
        return f"{self.segment}:{self.offset}"

    @property
    def is_fixed(self) -> bool:
        return self.width is not None

    @property
    def name(self) -> str:
        if self.field is not None:
            return self.field.name
        if isinstance(self.section, Conditional):
            return self.section.label
        return f"switch({self.section.discriminator})"  # type: ignore[union-attr]


@dataclass
class Scope:
    side: str
    key: ScopeKey
    labels: PathLabel
    elements: List[Element]
    parent: Optional["Scope"] = None
    names: Dict[str, Element] = field(default_factory=dict)

    def location(self, item: str) -> str:
        return " / ".join(self.labels + (item,))

    def position(self, item: str) -> str:
        return "/".join(self.key + (item,))


def build_scope(
    sections: Tuple[Section, ...],
    side: str,
    key: ScopeKey = (),
    labels: PathLabel = (),
    parent: Optional[Scope] = None,
) -> Scope:
    elements: List[Element] = []
    segment, offset = 0, 0
    for section in sections:
        if isinstance(section, Record):
            for fdef in section.fields:
                width = fdef.fixed_bits
                elements.append(Element(segment, offset, width, field=fdef))
                if width is None:
                    segment, offset = segment + 1, 0
                else:
                    offset += width
        else:
            elements.append(Element(segment, offset, section=section))
            segment, offset = segment + 1, 0
    scope = Scope(side, key, labels, elements, parent)
    scope.names = {e.field.name: e for e in elements if e.field is not None}
    return scope


@dataclass
class FieldGroup:
    """Fields of both specs covering the same bit range.

    A group may instead hold one computed-length array from each side.
    """

    index: int
    scope_key: ScopeKey
    segment: int
    start: int
    width: Optional[int]
    a: List[Element]
    b: List[Element]
    a_scope: Scope
    b_scope: Scope
    status: str = "matched"  # matched | type-mismatch

    @property
    def var(self) -> str:
        return f"g{self.index}"

    @property
    def position(self) -> str:
        width = "*" if self.width is None else self.width
        return "/".join(self.scope_key + (f"{self.segment}:{self.start}+{width}",))

    @property
    def matched(self) -> bool:
        return self.status == "matched"

    def names(self, side: str) -> str:
        return ",".join(e.name for e in (self.a if side == "a" else self.b))

    def location(self, side: str) -> str:
        scope = self.a_scope if side == "a" else self.b_scope
        return scope.location(self.names(side))


@dataclass(frozen=True)
class Slot:
    """Where a field's value sits inside its group variable."""

    group: int
    shift: int
    width: int


@dataclass
class Unmatched:
    side: str
    scope: Scope
    element: Element

    @property
    def location(self) -> str:
        return self.scope.location(self.element.name)

    @property
    def position(self) -> str:
        suffix = "" if self.element.width is None else f"+{self.element.width}"
        return self.scope.position(f"{self.element.position}{suffix}")


@dataclass
class Alignment:
    groups: List[FieldGroup] = field(default_factory=list)
    unmatched_a: List[Unmatched] = field(default_factory=list)
    unmatched_b: List[Unmatched] = field(default_factory=list)
    scope_pairs: List[Tuple[Scope, Scope]] = field(default_factory=list)
    slots: Dict[Tuple[str, ScopeKey, str], Slot] = field(default_factory=dict)
    # Arms and defaults with no counterpart, as
    # (side, scope holding the variant, element, tag or None).
    unmatched_arms: List[Tuple[str, Scope, Element, Optional[int]]] = field(
        default_factory=list
    )

    @property
    def pairs(self) -> List[FieldGroup]:
        return [g for g in self.groups if g.matched]

    def unmatched(self, side: str) -> List[Unmatched]:
        return self.unmatched_a if side == "a" else self.unmatched_b

    def resolve(self, side: str, scope: Scope, name: str) -> Optional[Slot]:
        """Slot of ``name`` seen from ``scope``, searching enclosing scopes outward."""
        current: Optional[Scope] = scope
        while current is not None:
            if name in current.names:
                return self.slots.get((side, current.key, name))
            current = current.parent
        return None

    def predicate(self, side: str, scope: Scope, c: Constraint):
        """``c`` as a predicate over group variables.

        None when it touches unaligned fields.
        """
        variables = self.variables(side, scope, [c])
        if variables is None:
            return None
        fn = compile_expr(c.expr)
        slots = []
        for name in sorted(c.refs):
            slot = self.resolve(side, scope, name)
            slots.append((name, f"g{slot.group}", slot.shift, (1 << slot.width) - 1))

        def holds(assignment: Assignment) -> bool:
            env = {
                name: (assignment[var] >> shift) & mask
                for name, var, shift, mask in slots
            }
            return bool(fn(env, assignment.get(TOTAL_LEN)))

        return holds

    def variables(
        self, side: str, scope: Scope, constraints
    ) -> Optional[List[Tuple[str, int]]]:
        found: Dict[str, int] = {}
        for c in constraints:
            for name in c.refs:
                slot = self.resolve(side, scope, name)
                if slot is None:
                    return None
                group = self.groups[slot.group]
                if not group.matched or group.width is None:
                    return None
                found[group.var] = group.width
            if uses_total_len(c.expr):
                found[TOTAL_LEN] = TOTAL_LEN_DOMAIN_BITS
        return sorted(found.items())


class _Aligner:
    def __init__(self, a: FormatSpec, b: FormatSpec):
        self.a, self.b = a, b
        self.result = Alignment()

    def run(self) -> Alignment:
        self.scopes(
            build_scope(self.a.sections, "a"), build_scope(self.b.sections, "b")
        )
        result = self.result
        logger.debug(
            f"Aligned '{self.a.name}' with '{self.b.name}': "
            f"{len(result.groups)} groups, "
            f"{len(result.unmatched_a)}/{len(result.unmatched_b)} unmatched"
        )
        return result

    def add_group(
        self,
        scope_a: Scope,
        scope_b: Scope,
        segment: int,
        start: int,
        width: Optional[int],
        a: List[Element],
        b: List[Element],
        status: str,
    ) -> FieldGroup:
        group = FieldGroup(
            len(self.result.groups),
            scope_a.key,
            segment,
            start,
            width,
            a,
            b,
            scope_a,
            scope_b,
            status,
        )
        self.result.groups.append(group)
        if width is not None:
            for side, scope, items in (("a", scope_a, a), ("b", scope_b, b)):
                for e in items:
                    shift = start + width - (e.offset + e.width)
                    slot = Slot(group.index, shift, e.width)
                    self.result.slots[(side, scope.key, e.field.name)] = slot
        return group

    def scopes(self, sa: Scope, sb: Scope) -> None:
        self.result.scope_pairs.append((sa, sb))
        segments = sorted(
            {e.segment for e in sa.elements} | {e.segment for e in sb.elements}
        )
        for k in segments:
            fixed_a = [e for e in sa.elements if e.segment == k and e.is_fixed]
            fixed_b = [e for e in sb.elements if e.segment == k and e.is_fixed]
            self.sweep(sa, sb, k, fixed_a, fixed_b)
        boundaries_b = {(e.segment, e.offset): e for e in sb.elements if not e.is_fixed}
        matched_b = set()
        for ea in (e for e in sa.elements if not e.is_fixed):
            eb = boundaries_b.get((ea.segment, ea.offset))
            if eb is not None and self.boundary(sa, sb, ea, eb):
                matched_b.add((eb.segment, eb.offset))
            else:
                self.result.unmatched_a.append(Unmatched("a", sa, ea))
        for key, eb in boundaries_b.items():
            if key not in matched_b:
                self.result.unmatched_b.append(Unmatched("b", sb, eb))

    def sweep(
        self,
        sa: Scope,
        sb: Scope,
        segment: int,
        fixed_a: List[Element],
        fixed_b: List[Element],
    ) -> None:
        items = sorted(
            [
                (e.offset, e.offset + e.width, side, i, e)
                for side, fixed in (("a", fixed_a), ("b", fixed_b))
                for i, e in enumerate(fixed)
            ],
            key=lambda t: t[:4],
        )
        clusters: List[Tuple[int, int, List[Element], List[Element]]] = []
        for start, end, side, _, e in items:
            if clusters and start < clusters[-1][1]:
                lo, hi, ca, cb = clusters[-1]
                clusters[-1] = (lo, max(hi, end), ca, cb)
            else:
                clusters.append((start, end, [], []))
            (clusters[-1][2] if side == "a" else clusters[-1][3]).append(e)
        for start, end, ca, cb in clusters:
            if not ca or not cb:
                for e in ca:
                    self.result.unmatched_a.append(Unmatched("a", sa, e))
                for e in cb:
                    self.result.unmatched_b.append(Unmatched("b", sb, e))
                continue
            if self.compatible(start, end, ca, cb):
                status = "matched"
            else:
                status = "type-mismatch"
            self.add_group(sa, sb, segment, start, end - start, ca, cb, status)

    @staticmethod
    def compatible(start: int, end: int, ca: List[Element], cb: List[Element]) -> bool:
        for side in (ca, cb):
            if side[0].offset != start or side[-1].offset + side[-1].width != end:
                return False
        if len(ca) > 1 and len(cb) > 1:
            return False
        encodings = {e.field.encoding for e in ca + cb}
        if encodings == {"uint"}:
            return True
        return len(ca) == len(cb) == 1 and encodings == {"bytes"}

    def boundary(self, sa: Scope, sb: Scope, ea: Element, eb: Element) -> bool:
        if ea.field is not None and eb.field is not None:
            if isinstance(ea.field.type, Bytes) and isinstance(eb.field.type, Bytes):
                self.add_group(
                    sa, sb, ea.segment, ea.offset, None, [ea], [eb], "matched"
                )
                return True
            return False
        here = f"{ea.segment}:{ea.offset}"
        if isinstance(ea.section, Conditional) and isinstance(eb.section, Conditional):
            if not self.guards_equivalent(sa, sb, ea.section.guard, eb.section.guard):
                return False
            self.scopes(
                _child(sa, ea.section.body, f"{here}?", ea.section.label),
                _child(sb, eb.section.body, f"{here}?", eb.section.label),
            )
            return True
        if isinstance(ea.section, Variant) and isinstance(eb.section, Variant):
            va, vb = ea.section, eb.section
            slot_a = self.result.resolve("a", sa, va.discriminator)
            slot_b = self.result.resolve("b", sb, vb.discriminator)
            if not (slot_a and slot_b and slot_a.group == slot_b.group):
                return False
            group = self.result.groups[slot_a.group]
            if not (group.matched and slot_a.width == slot_b.width == group.width):
                return False
            arms_b = {arm.tag: arm for arm in vb.arms}
            for arm in va.arms:
                other = arms_b.pop(arm.tag, None)
                if other is None:
                    self.result.unmatched_arms.append(("a", sa, ea, arm.tag))
                    continue
                at = f"{here}={arm.tag}"
                self.scopes(
                    _child(sa, arm.body, at, va.arm_label(arm.tag)),
                    _child(sb, other.body, at, vb.arm_label(arm.tag)),
                )
            for tag in arms_b:
                self.result.unmatched_arms.append(("b", sb, eb, tag))
            if va.default is not None and vb.default is not None:
                self.scopes(
                    _child(sa, va.default, f"{here}=*", va.arm_label(None)),
                    _child(sb, vb.default, f"{here}=*", vb.arm_label(None)),
                )
            elif va.default is not None:
                self.result.unmatched_arms.append(("a", sa, ea, None))
            elif vb.default is not None:
                self.result.unmatched_arms.append(("b", sb, eb, None))
            return True
        return False

    def guards_equivalent(
        self, sa: Scope, sb: Scope, ga: Constraint, gb: Constraint
    ) -> bool:
        pa = self.result.predicate("a", sa, ga)
        pb = self.result.predicate("b", sb, gb)
        if pa is None or pb is None:
            return False
        variables = sorted(
            set(self.result.variables("a", sa, [ga]))
            | set(self.result.variables("b", sb, [gb]))
        )
        forward = check_implication([pa], pb, variables)
        backward = check_implication([pb], pa, variables)
        return forward.implied and backward.implied


def _child(parent: Scope, body: Tuple[Section, ...], at: str, label: str) -> Scope:
    return build_scope(
        body, parent.side, parent.key + (at,), parent.labels + (label,), parent
    )


def align_fields(a: FormatSpec, b: FormatSpec) -> Alignment:
    """Pair the fields of ``a`` and ``b`` by resolved bit position and path."""
    return _Aligner(a, b).run()


def iter_section_units(
    section: Section, labels: PathLabel, key: ScopeKey, here: str
) -> Iterator[Tuple[str, str, Section]]:
    """(location, position, section) for a sub-section and everything nested in it."""
    if isinstance(section, Conditional):
        inner_labels, inner_key = labels + (section.label,), key + (f"{here}?",)
        yield " / ".join(inner_labels), "/".join(inner_key), section
        yield from _nested_units(section.body, inner_labels, inner_key)
    elif isinstance(section, Variant):
        tags: List[Optional[int]] = [arm.tag for arm in section.arms]
        if section.default is not None:
            tags.append(None)
        for tag in tags:
            yield from iter_arm_units(section, tag, labels, key, here)


def iter_arm_units(
    variant: Variant, tag: Optional[int], labels: PathLabel, key: ScopeKey, here: str
) -> Iterator[Tuple[str, str, Section]]:
    inner_labels = labels + (variant.arm_label(tag),)
    inner_key = key + (f"{here}={'*' if tag is None else tag}",)
    body = variant.default if tag is None else variant.body_for(tag)
    yield " / ".join(inner_labels), "/".join(inner_key), variant
    yield from _nested_units(body or (), inner_labels, inner_key)


def _nested_units(
    body: Tuple[Section, ...], labels: PathLabel, key: ScopeKey
) -> Iterator[Tuple[str, str, Section]]:
    scope = build_scope(body, "", key, labels)
    for e in scope.elements:
        if e.section is not None:
            yield from iter_section_units(e.section, labels, key, e.position)


__all__ = [
    "Alignment",
    "FieldGroup",
    "Scope",
    "Slot",
    "Unmatched",
    "align_fields",
    "build_scope",
]
