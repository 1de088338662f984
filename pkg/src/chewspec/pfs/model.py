"""
Immutable data model of a PFS packet-format specification.

A FormatSpec is an ordered tuple of sections. Records hold fields; conditionals
hold a guard and a body; variants switch on an earlier unsigned field. Bodies
are themselves ordered tuples of sections. Source spans are carried for
diagnostics but never take part in equality.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from chewspec.constants import TOTAL_LEN


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class FieldRef:
    name: str


@dataclass(frozen=True)
class TotalLen:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[IntLit, FieldRef, TotalLen, BinOp, Not]

ARITH_OPS = ("+", "-", "*")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")
NEGATED_COMPARE = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
FLIPPED_COMPARE = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}

_PRECEDENCE = {
    "or": 1,
    "and": 2,
    "not": 3,
    **{op: 4 for op in COMPARE_OPS},
    "+": 5,
    "-": 5,
    "*": 6,
}


def expr_text(expr: Expr) -> str:
    """Normalized source text with the minimal parentheses."""
    return _text(expr, 0)


def _text(expr: Expr, parent: int) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, FieldRef):
        return expr.name
    if isinstance(expr, TotalLen):
        return TOTAL_LEN
    if isinstance(expr, Not):
        inner = f"not {_text(expr.operand, _PRECEDENCE['not'])}"
        return f"({inner})" if parent > _PRECEDENCE["not"] else inner
    prec = _PRECEDENCE[expr.op]
    # Left-associative: the right operand of an equal-precedence op needs parens.
    # Comparisons do not chain, so both operands of a comparison bind tighter.
    left_min = prec + 1 if expr.op in COMPARE_OPS else prec
    left = _text(expr.left, left_min)
    right = _text(expr.right, prec + 1)
    inner = f"{left} {expr.op} {right}"
    return f"({inner})" if parent > prec else inner


def expr_refs(expr: Expr) -> FrozenSet[str]:
    """Field names referenced by an expression."""
    if isinstance(expr, FieldRef):
        return frozenset({expr.name})
    if isinstance(expr, BinOp):
        return expr_refs(expr.left) | expr_refs(expr.right)
    if isinstance(expr, Not):
        return expr_refs(expr.operand)
    return frozenset()


def uses_total_len(expr: Expr) -> bool:
    if isinstance(expr, TotalLen):
        return True
    if isinstance(expr, BinOp):
        return uses_total_len(expr.left) or uses_total_len(expr.right)
    if isinstance(expr, Not):
        return uses_total_len(expr.operand)
    return False


def conjuncts(expr: Expr) -> List[Expr]:
    """Split a top-level ``and`` chain."""
    if isinstance(expr, BinOp) and expr.op == "and":
        return conjuncts(expr.left) + conjuncts(expr.right)
    return [expr]


def rename_expr(expr: Expr, mapping: Dict[str, str]) -> Expr:
    if isinstance(expr, FieldRef):
        return FieldRef(mapping.get(expr.name, expr.name))
    if isinstance(expr, BinOp):
        left = rename_expr(expr.left, mapping)
        return BinOp(expr.op, left, rename_expr(expr.right, mapping))
    if isinstance(expr, Not):
        return Not(rename_expr(expr.operand, mapping))
    return expr


@dataclass(frozen=True)
class Constraint:
    """A boolean expression; its id is a content hash of the normalized text."""

    expr: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    @cached_property
    def text(self) -> str:
        return expr_text(self.expr)

    @cached_property
    def id(self) -> str:
        return "c_" + hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:12]

    @cached_property
    def refs(self) -> FrozenSet[str]:
        return expr_refs(self.expr)

    def __str__(self) -> str:
        return self.text


# Field types


@dataclass(frozen=True)
class UInt:
    bits: int

    def __str__(self) -> str:
        return f"u{self.bits}"


@dataclass(frozen=True)
class Bytes:
    length: Expr

    def __str__(self) -> str:
        return f"bytes[{expr_text(self.length)}]"


FieldType = Union[UInt, Bytes]


@dataclass(frozen=True)
class FieldDef:
    name: str
    type: FieldType
    constraints: Tuple[Constraint, ...] = ()
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    @property
    def encoding(self) -> str:
        return "uint" if isinstance(self.type, UInt) else "bytes"

    @property
    def fixed_bits(self) -> Optional[int]:
        """Bit width when known statically, else None."""
        if isinstance(self.type, UInt):
            return self.type.bits
        if isinstance(self.type.length, IntLit):
            return 8 * self.type.length.value
        return None


# Sections


@dataclass(frozen=True)
class Record:
    fields: Tuple[FieldDef, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    kind = "record"


@dataclass(frozen=True)
class Conditional:
    guard: Constraint
    body: Tuple["Section", ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    kind = "conditional"

    @property
    def label(self) -> str:
        return f"if({self.guard.text})"


@dataclass(frozen=True)
class Arm:
    tag: int
    body: Tuple["Section", ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Variant:
    discriminator: str
    arms: Tuple[Arm, ...]
    default: Optional[Tuple["Section", ...]] = None
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    kind = "variant"

    def arm_label(self, tag: Optional[int]) -> str:
        return f"{self.discriminator}={'default' if tag is None else tag}"

    def body_for(self, tag: int) -> Optional[Tuple["Section", ...]]:
        for arm in self.arms:
            if arm.tag == tag:
                return arm.body
        return self.default


Section = Union[Record, Conditional, Variant]
PathLabel = Tuple[str, ...]


@dataclass(frozen=True)
class FormatSpec:
    name: str
    sections: Tuple[Section, ...]
    constraints: Tuple[Constraint, ...] = ()
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def iter_fields(self) -> Iterator[Tuple[PathLabel, FieldDef]]:
        """Every field with the label of the section path that holds it."""
        yield from _iter_fields(self.sections, ())

    @property
    def field_count(self) -> int:
        return sum(1 for _ in self.iter_fields())

    def iter_constraints(
        self,
    ) -> Iterator[Tuple[PathLabel, Optional[FieldDef], Constraint]]:
        """Field constraints in declaration order, then global constraints."""
        for path, fdef in self.iter_fields():
            for constraint in fdef.constraints:
                yield path, fdef, constraint
        for constraint in self.constraints:
            yield (), None, constraint

    def constraint_ids(self) -> List[str]:
        seen: Dict[str, None] = {}
        for _, _, constraint in self.iter_constraints():
            seen.setdefault(constraint.id, None)
        return list(seen)

    def find_constraint(self, text: str) -> Constraint:
        """Look a constraint up by its normalized text (whitespace-insensitive)."""
        wanted = " ".join(text.split())
        for _, _, constraint in self.iter_constraints():
            if constraint.text == wanted:
                return constraint
        raise KeyError(f"No constraint '{text}' in spec '{self.name}'")


def _iter_fields(
    sections: Tuple[Section, ...], path: PathLabel
) -> Iterator[Tuple[PathLabel, FieldDef]]:
    for section in sections:
        if isinstance(section, Record):
            for fdef in section.fields:
                yield path, fdef
        elif isinstance(section, Conditional):
            yield from _iter_fields(section.body, path + (section.label,))
        else:
            for arm in section.arms:
                arm_path = path + (section.arm_label(arm.tag),)
                yield from _iter_fields(arm.body, arm_path)
            if section.default is not None:
                default_path = path + (section.arm_label(None),)
                yield from _iter_fields(section.default, default_path)


def rename_fields(spec: FormatSpec, mapping: Dict[str, str]) -> FormatSpec:
    """Copy of ``spec`` with fields renamed everywhere they are referenced."""

    def constraint(c: Constraint) -> Constraint:
        return Constraint(rename_expr(c.expr, mapping))

    def fdef(f: FieldDef) -> FieldDef:
        ftype = f.type
        if not isinstance(ftype, UInt):
            ftype = Bytes(rename_expr(ftype.length, mapping))
        constraints = tuple(constraint(c) for c in f.constraints)
        return FieldDef(mapping.get(f.name, f.name), ftype, constraints)

    def block(sections: Tuple[Section, ...]) -> Tuple[Section, ...]:
        out: List[Section] = []
        for s in sections:
            if isinstance(s, Record):
                out.append(Record(tuple(fdef(f) for f in s.fields)))
            elif isinstance(s, Conditional):
                out.append(Conditional(constraint(s.guard), block(s.body)))
            else:
                out.append(
                    Variant(
                        mapping.get(s.discriminator, s.discriminator),
                        tuple(Arm(a.tag, block(a.body)) for a in s.arms),
                        None if s.default is None else block(s.default),
                    )
                )
        return tuple(out)

    constraints = tuple(constraint(c) for c in spec.constraints)
    return FormatSpec(spec.name, block(spec.sections), constraints)
