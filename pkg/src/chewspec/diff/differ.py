"""
Differential analysis of a CodeSpec against a DocSpec.

Field and section discrepancies come straight from the alignment. Constraint
discrepancies are decided per constraint: a constraint of one spec is
compared with the conjunction of the other spec's constraints whose aligned
fields lie inside the same field groups, on the same or an enclosing path.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from chewspec._version import SCHEMA_VERSION
from chewspec.constants import (
    DISCREPANCY_KINDS,
    FIELD_TYPE_KINDS,
    TOTAL_LEN,
    WITNESS_BUDGET,
)
from chewspec.diff.alignment import (
    Alignment,
    Element,
    FieldGroup,
    Scope,
    align_fields,
    iter_arm_units,
    iter_section_units,
)
from chewspec.diff.equivalence import Assignment, check_implication
from chewspec.errors import GenerationError
from chewspec.packets.checker import check_packet
from chewspec.packets.codec import set_bits
from chewspec.packets.corpus import TestPacket
from chewspec.packets.generator import generate_positive
from chewspec.pfs.canonical import spec_digest
from chewspec.pfs.model import (
    Conditional,
    Constraint,
    FieldDef,
    FormatSpec,
    Record,
    Section,
    Variant,
    expr_text,
    rename_expr,
)

logger = logging.getLogger(__name__)

SIDES = {"a": "code", "b": "doc"}
WITNESS_POSITIVES = 8

ScopedConstraint = Tuple[Scope, Optional[FieldDef], Constraint]


@dataclass(frozen=True)
class Discrepancy:
    kind: str
    location: str
    position: str
    code_location: Optional[str] = None
    doc_location: Optional[str] = None
    details: Dict[str, str] = field(default_factory=dict)
    constraint: Optional[str] = None
    constraint_id: Optional[str] = None
    witness: Optional[str] = None
    exhaustive: Optional[bool] = None

    @property
    def category(self) -> str:
        return "field type" if self.kind in FIELD_TYPE_KINDS else "field constraint"

    @property
    def sort_key(self) -> Tuple[str, str, str, str]:
        return (self.location, self.kind, self.constraint or "", self.position)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "location": self.location,
            "position": self.position,
            "code_location": self.code_location,
            "doc_location": self.doc_location,
            "details": dict(self.details),
            "constraint": self.constraint,
            "constraint_id": self.constraint_id,
            "witness": self.witness,
            "exhaustive": self.exhaustive,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Discrepancy":
        return cls(
            kind=data["kind"],
            location=data["location"],
            position=data.get("position", ""),
            code_location=data.get("code_location"),
            doc_location=data.get("doc_location"),
            details=dict(data.get("details") or {}),
            constraint=data.get("constraint"),
            constraint_id=data.get("constraint_id"),
            witness=data.get("witness"),
            exhaustive=data.get("exhaustive"),
        )


def summarize(discrepancies: Sequence[Discrepancy]) -> Dict[str, Any]:
    by_kind = {kind: 0 for kind in DISCREPANCY_KINDS}
    for d in discrepancies:
        by_kind[d.kind] += 1
    decided = [d for d in discrepancies if d.exhaustive is not None]
    field_type = sum(by_kind[k] for k in FIELD_TYPE_KINDS)
    return {
        "total": len(discrepancies),
        "by_kind": by_kind,
        "by_category": {
            "field type": field_type,
            "field constraint": len(discrepancies) - field_type,
        },
        "decisions": {
            "exhaustive": sum(1 for d in decided if d.exhaustive),
            "sampled": sum(1 for d in decided if not d.exhaustive),
        },
        "with_witness": sum(1 for d in discrepancies if d.witness),
    }


@dataclass
class ValidationReport:
    code_spec: str
    doc_spec: str
    code_digest: str
    doc_digest: str
    discrepancies: List[Discrepancy] = field(default_factory=list)

    @property
    def summary(self) -> Dict[str, Any]:
        return summarize(self.discrepancies)

    @property
    def clean(self) -> bool:
        return not self.discrepancies

    def of_kind(self, kind: str) -> List[Discrepancy]:
        return [d for d in self.discrepancies if d.kind == kind]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "code_spec": {"name": self.code_spec, "digest": self.code_digest},
            "doc_spec": {"name": self.doc_spec, "digest": self.doc_digest},
            "discrepancies": [d.to_dict() for d in self.discrepancies],
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ValidationReport":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported report schema_version {version!r}")
        report = cls(
            code_spec=data["code_spec"]["name"],
            doc_spec=data["doc_spec"]["name"],
            code_digest=data["code_spec"]["digest"],
            doc_digest=data["doc_spec"]["digest"],
            discrepancies=[
                Discrepancy.from_dict(d) for d in data.get("discrepancies", [])
            ],
        )
        recorded = data.get("summary", {}).get("by_kind")
        if recorded is not None and recorded != report.summary["by_kind"]:
            raise ValueError("Report summary does not match its discrepancy list")
        return report


def describe_field(fdef: FieldDef) -> str:
    where = ""
    if fdef.constraints:
        where = f" where {', '.join(c.text for c in fdef.constraints)}"
    return f"{fdef.name}: {fdef.type}{where}"


def describe_section(
    section: Section, tag: Optional[int] = None, is_arm: bool = False
) -> str:
    if isinstance(section, Conditional):
        body, head = section.body, f"if {section.guard.text}"
    elif isinstance(section, Variant) and is_arm:
        body = (section.default if tag is None else section.body_for(tag)) or ()
        head = section.arm_label(tag)
    else:
        return str(section)
    names = [f.name for s in body if isinstance(s, Record) for f in s.fields]
    return f"{head} {{ {', '.join(names)} }}"


def _describe_elements(elements: Sequence[Element]) -> str:
    return "; ".join(describe_field(e.field) for e in elements if e.field is not None)


def _provenance(scope: Scope, item: str, span) -> str:
    where = scope.location(item)
    return f"{where} @ {span}" if span is not None else where


class _Differ:
    def __init__(self, code: FormatSpec, doc: FormatSpec, seed: int):
        self.specs = {"a": code, "b": doc}
        self.seed = seed
        self.alignment: Alignment = align_fields(code, doc)
        self.found: List[Discrepancy] = []
        self.seen: set = set()
        self._positives: Dict[str, List[TestPacket]] = {}

    def emit(self, d: Discrepancy) -> None:
        key = (d.kind, d.position, d.constraint or d.location)
        if key in self.seen:
            return
        self.seen.add(key)
        logger.debug(f"Discrepancy {d.kind} at {d.location}")
        self.found.append(d)

    def missing_kind(self, present_side: str) -> str:
        """Kind for something present on ``present_side`` and absent on the other."""
        absent = SIDES["b" if present_side == "a" else "a"]
        return f"MISSING_FIELD_IN_{absent.upper()}"

    # fields and sections

    def structure(self) -> None:
        for group in self.alignment.groups:
            if group.matched:
                continue
            self.emit(
                Discrepancy(
                    kind="TYPE_MISMATCH",
                    location=f"{group.location('a')} ~ {group.location('b')}",
                    position=group.position,
                    code_location=group.location("a"),
                    doc_location=group.location("b"),
                    details={
                        "code": _describe_elements(group.a),
                        "doc": _describe_elements(group.b),
                    },
                )
            )
        for side in ("a", "b"):
            for item in self.alignment.unmatched(side):
                element = item.element
                if element.field is not None:
                    text = describe_field(element.field)
                    span = element.field.span
                    self.missing(side, item.location, item.position, text, span)
                    continue
                scope = item.scope
                units = iter_section_units(
                    element.section, scope.labels, scope.key, element.position
                )
                self.missing_units(side, units)
        for side, scope, element, tag in self.alignment.unmatched_arms:
            units = iter_arm_units(
                element.section, tag, scope.labels, scope.key, element.position
            )
            self.missing_units(side, units)

    def missing_units(
        self, side: str, units: Iterator[Tuple[str, str, Section]]
    ) -> None:
        for location, position, section in units:
            text = self._unit_text(section, location)
            self.missing(side, location, position, text, section.span)

    @staticmethod
    def _unit_text(section: Section, location: str) -> str:
        if isinstance(section, Variant):
            label = location.rsplit(" / ", 1)[-1]
            raw = label.split("=", 1)[1]
            tag = None if raw == "default" else int(raw)
            return describe_section(section, tag, is_arm=True)
        return describe_section(section)

    def missing(self, side: str, location: str, position: str, text: str, span) -> None:
        where = f"{location} @ {span}" if span is not None else location
        self.emit(
            Discrepancy(
                kind=self.missing_kind(side),
                location=location,
                position=position,
                code_location=where if side == "a" else None,
                doc_location=where if side == "b" else None,
                details={
                    SIDES[side]: text,
                    SIDES["b" if side == "a" else "a"]: "(absent)",
                },
            )
        )

    # constraints

    def scoped_constraints(self, side: str) -> List[ScopedConstraint]:
        out: List[ScopedConstraint] = []
        for pair in self.alignment.scope_pairs:
            scope = pair[0] if side == "a" else pair[1]
            for element in scope.elements:
                fdef = element.field
                if fdef is not None:
                    out.extend((scope, fdef, c) for c in fdef.constraints)
            if not scope.key:
                out.extend((scope, None, c) for c in self.specs[side].constraints)
        return out

    def signature(self, side: str, scope: Scope, c: Constraint) -> Optional[str]:
        mapping = {}
        for name in c.refs:
            slot = self.alignment.resolve(side, scope, name)
            if slot is None:
                return None
            mapping[name] = f"g{slot.group}[{slot.shift}:{slot.width}]"
        return expr_text(rename_expr(c.expr, mapping))

    def constraints(self) -> None:
        scoped = {side: self.scoped_constraints(side) for side in ("a", "b")}
        for side, other in (("a", "b"), ("b", "a")):
            for scope, fdef, c in scoped[side]:
                self.compare(side, other, scope, fdef, c, scoped[other])

    def compare(
        self,
        side: str,
        other: str,
        scope: Scope,
        fdef: Optional[FieldDef],
        c: Constraint,
        theirs: List[ScopedConstraint],
    ) -> None:
        variables = self.alignment.variables(side, scope, [c])
        if variables is None:
            logger.debug(f"Skipping '{c.text}': it touches unaligned fields")
            return
        groups = {name for name, _ in variables if name != TOTAL_LEN}
        own = self.signature(side, scope, c)
        premises, premise_constraints = [], []
        for their_scope, _, theirs_c in theirs:
            if their_scope.key != scope.key[: len(their_scope.key)]:
                continue
            their_vars = self.alignment.variables(other, their_scope, [theirs_c])
            if their_vars is None:
                continue
            if not {n for n, _ in their_vars if n != TOTAL_LEN} <= groups:
                continue
            if self.signature(other, their_scope, theirs_c) == own:
                return
            premises.append(self.alignment.predicate(other, their_scope, theirs_c))
            premise_constraints.append(theirs_c)
            variables = sorted(set(variables) | set(their_vars))
        goal = self.alignment.predicate(side, scope, c)
        result = check_implication(premises, goal, variables)
        if result.implied:
            return
        spanned = ",".join(sorted(self.group_positions(groups)))
        position = "/".join(scope.key + ("{" + spanned + "}",))
        if result.conflict:
            kind = "CONSTRAINT_CONFLICT"
        else:
            kind = f"CONSTRAINT_MISSING_IN_{SIDES[other].upper()}"
        item = fdef.name if fdef is not None else "<global>"
        span = c.span or (fdef.span if fdef is not None else None)
        provenance = _provenance(scope, item, span)
        other_text = " and ".join(p.text for p in premise_constraints) or "(none)"
        witness = self.witness(result.counterexamples, accept_side=other)
        self.emit(
            Discrepancy(
                kind=kind,
                location=scope.location(item),
                position=position,
                code_location=provenance if side == "a" else None,
                doc_location=provenance if side == "b" else None,
                details={SIDES[side]: c.text, SIDES[other]: other_text},
                constraint=c.text,
                constraint_id=c.id,
                witness=witness,
                exhaustive=result.exhaustive,
            )
        )

    def group_positions(self, groups) -> List[str]:
        return [self.alignment.groups[int(var[1:])].position for var in groups]

    # witnesses

    def positives(self, side: str) -> List[TestPacket]:
        if side not in self._positives:
            try:
                self._positives[side] = generate_positive(
                    self.specs[side], self.seed, WITNESS_POSITIVES
                )
            except GenerationError as exc:
                logger.warning(
                    f"No positives for witness search on {SIDES[side]} side: {exc}"
                )
                self._positives[side] = []
        return self._positives[side]

    def embed(self, side: str, data: bytes, assignment: Assignment) -> Optional[bytes]:
        if TOTAL_LEN in assignment and assignment[TOTAL_LEN] != len(data):
            return None
        layout = check_packet(self.specs[side], data).layout
        for var, value in sorted(assignment.items()):
            if var == TOTAL_LEN:
                continue
            group: FieldGroup = self.alignment.groups[int(var[1:])]
            first = (group.a if side == "a" else group.b)[0]
            scope = group.a_scope if side == "a" else group.b_scope
            entry = next(
                (
                    e
                    for e in layout
                    if e.name == first.field.name and e.path == scope.labels
                ),
                None,
            )
            if entry is None:
                return None
            data = set_bits(data, entry.offset, group.width, value)
        return data

    def witness(self, assignments: List[Assignment], accept_side: str) -> Optional[str]:
        """Hex of a packet one spec accepts and the other rejects.

        Packets that ``accept_side`` accepts are preferred.
        """
        fallback: Optional[str] = None
        tries = 0
        for base_side in (accept_side, "a" if accept_side == "b" else "b"):
            for packet in self.positives(base_side):
                for assignment in assignments:
                    if tries >= WITNESS_BUDGET:
                        return fallback
                    tries += 1
                    data = self.embed(base_side, packet.data, assignment)
                    if data is None:
                        continue
                    verdicts = {
                        s: check_packet(self.specs[s], data).accepted
                        for s in ("a", "b")
                    }
                    if verdicts["a"] == verdicts["b"]:
                        continue
                    if verdicts[accept_side]:
                        return data.hex()
                    fallback = fallback or data.hex()
        return fallback

    def run(self) -> List[Discrepancy]:
        self.structure()
        self.constraints()
        return sorted(self.found, key=lambda d: d.sort_key)


def diff_specs(code: FormatSpec, doc: FormatSpec, seed: int = 0) -> ValidationReport:
    """Compare a spec extracted from code with one extracted from the standard."""
    logger.info(f"Diffing '{code.name}' against '{doc.name}'")
    discrepancies = _Differ(code, doc, seed).run()
    report = ValidationReport(
        code.name, doc.name, spec_digest(code), spec_digest(doc), discrepancies
    )
    by_kind = report.summary["by_kind"]
    logger.info(f"Found {len(discrepancies)} discrepancies: {by_kind}")
    return report
