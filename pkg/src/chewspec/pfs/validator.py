"""Semantic well-formedness checks for FormatSpec values."""

import logging
from typing import Dict, List, Optional, Set, Tuple

from chewspec.constants import (
    DIAG_BAD_WIDTH,
    DIAG_DISCRIMINATOR_TOO_WIDE,
    DIAG_DISCRIMINATOR_TYPE,
    DIAG_DUPLICATE_FIELD,
    DIAG_DUPLICATE_TAG,
    DIAG_EMPTY_RECORD,
    DIAG_FORWARD_REFERENCE,
    DIAG_OUT_OF_SCOPE_REFERENCE,
    DIAG_TYPE_ERROR,
    DIAG_UNALIGNED,
    DIAG_UNDEFINED_REFERENCE,
    DIAG_UNREACHABLE_ARM,
    MAX_DISCRIMINATOR_BITS,
    MAX_UINT_BITS,
)
from chewspec.pfs.diagnostics import Diagnostic, error, warning
from chewspec.pfs.model import (
    Bytes,
    Conditional,
    Constraint,
    Expr,
    FieldDef,
    FieldRef,
    FormatSpec,
    IntLit,
    Not,
    Record,
    Section,
    Span,
    TotalLen,
    UInt,
    Variant,
    ARITH_OPS,
    BOOL_OPS,
    COMPARE_OPS,
)

logger = logging.getLogger(__name__)

Scope = Dict[str, FieldDef]


class _Validator:
    def __init__(self, spec: FormatSpec):
        self.spec = spec
        self.diagnostics: List[Diagnostic] = []
        # Declaration order of every field, used to tell forward references apart.
        self.order: Dict[str, int] = {}
        for index, (_, fdef) in enumerate(spec.iter_fields()):
            self.order.setdefault(fdef.name, index)
        # Fields checked so far, in the same order.
        self.seen_fields = 0

    def report(self, diag: Diagnostic) -> None:
        logger.debug(f"Validation: {diag}")
        self.diagnostics.append(diag)

    def fail(self, code: str, message: str, span: Optional[Span]) -> None:
        self.report(error(code, message, span))

    def run(self) -> List[Diagnostic]:
        name = self.spec.name
        if not self.spec.sections:
            message = f"Format '{name}' declares no fields"
            self.fail(DIAG_EMPTY_RECORD, message, self.spec.span)
        visible: Scope = {}
        taken: Set[str] = set()
        end_bits = self.check_block(self.spec.sections, visible, taken, 0)
        if end_bits % 8:
            self.fail(
                DIAG_UNALIGNED,
                f"Format '{name}' ends {end_bits % 8} bits past a byte boundary",
                self.spec.span,
            )
        top_level = {
            f.name: f
            for s in self.spec.sections
            if isinstance(s, Record)
            for f in s.fields
        }
        for c in self.spec.constraints:
            self.check_constraint(c, top_level, None, "global constraint")
        return self.diagnostics

    def check_block(
        self,
        sections: Tuple[Section, ...],
        visible: Scope,
        taken: Set[str],
        bit_mod: int,
    ) -> int:
        """Check a block; returns the bit position modulo 8 at its end."""
        for section in sections:
            if isinstance(section, Record):
                if not section.fields:
                    self.fail(DIAG_EMPTY_RECORD, "Empty record", section.span)
                for fdef in section.fields:
                    bit_mod = self.check_field(fdef, visible, taken, bit_mod)
            elif isinstance(section, Conditional):
                what = f"guard of {section.label}"
                self.check_constraint(section.guard, visible, None, what)
                inner_taken = set(taken)
                body_mod = self.check_block(
                    section.body, dict(visible), inner_taken, bit_mod
                )
                if body_mod != bit_mod:
                    self.fail(
                        DIAG_UNALIGNED,
                        f"Body of {section.label} is not a whole number of bytes",
                        section.span,
                    )
                taken |= inner_taken
            else:
                self.check_variant(section, visible, taken, bit_mod)
        return bit_mod

    def check_variant(
        self, section: Variant, visible: Scope, taken: Set[str], bit_mod: int
    ) -> None:
        name = section.discriminator
        disc = visible.get(name)
        if disc is None:
            self.report_reference(name, f"switch on '{name}'", section.span)
            width: Optional[int] = None
        elif not isinstance(disc.type, UInt):
            self.fail(
                DIAG_DISCRIMINATOR_TYPE,
                f"Discriminator '{disc.name}' must be an unsigned integer field",
                section.span,
            )
            width = None
        else:
            width = disc.type.bits
            if width > MAX_DISCRIMINATOR_BITS:
                self.fail(
                    DIAG_DISCRIMINATOR_TOO_WIDE,
                    f"Discriminator too wide: '{disc.name}' is {width} bits "
                    f"(max {MAX_DISCRIMINATOR_BITS})",
                    section.span,
                )
        seen: Set[int] = set()
        bodies = [(section.arm_label(a.tag), a.body, a.span) for a in section.arms]
        for arm in section.arms:
            if arm.tag in seen:
                self.fail(
                    DIAG_DUPLICATE_TAG,
                    f"Duplicate arm tag {arm.tag} in switch on '{name}'",
                    arm.span,
                )
            seen.add(arm.tag)
            if width is not None and width <= MAX_UINT_BITS and arm.tag >= (1 << width):
                self.report(
                    warning(
                        DIAG_UNREACHABLE_ARM,
                        f"Arm {arm.tag} cannot match {width}-bit '{name}'",
                        arm.span,
                    )
                )
        if section.default is not None:
            bodies.append((section.arm_label(None), section.default, section.span))
        union_taken: Set[str] = set()
        for label, body, span in bodies:
            inner_taken = set(taken)
            body_mod = self.check_block(body, dict(visible), inner_taken, bit_mod)
            if body_mod != bit_mod:
                message = f"Arm {label} is not a whole number of bytes"
                self.fail(DIAG_UNALIGNED, message, span)
            union_taken |= inner_taken
        taken |= union_taken

    def check_field(
        self, fdef: FieldDef, visible: Scope, taken: Set[str], bit_mod: int
    ) -> int:
        name = fdef.name
        if name in taken:
            self.fail(DIAG_DUPLICATE_FIELD, f"Duplicate field name '{name}'", fdef.span)
        if isinstance(fdef.type, UInt):
            bits = fdef.type.bits
            if not 1 <= bits <= MAX_UINT_BITS:
                self.fail(
                    DIAG_BAD_WIDTH,
                    f"Field '{name}' width u{bits} outside 1..{MAX_UINT_BITS}",
                    fdef.span,
                )
            new_mod = (bit_mod + bits) % 8
        else:
            if bit_mod:
                self.fail(
                    DIAG_UNALIGNED,
                    f"Byte array '{name}' does not start on a byte boundary",
                    fdef.span,
                )
            what = f"length of '{name}'"
            kind = self.expr_type(fdef.type.length, visible, fdef.span, what)
            if kind == "bool":
                self.fail(
                    DIAG_TYPE_ERROR,
                    f"Length of '{name}' must be an integer expression",
                    fdef.span,
                )
            new_mod = bit_mod
        taken.add(name)
        visible[name] = fdef
        for c in fdef.constraints:
            self.check_constraint(c, visible, fdef.span, f"constraint on '{name}'")
        self.seen_fields += 1
        return new_mod

    def check_constraint(
        self, c: Constraint, visible: Scope, span: Optional[Span], what: str
    ) -> None:
        where = c.span or span
        kind = self.expr_type(c.expr, visible, where, what)
        if kind == "int":
            self.fail(
                DIAG_TYPE_ERROR,
                f"{what.capitalize()} '{c.text}' is an integer, not a condition",
                where,
            )

    def report_reference(self, name: str, what: str, span: Optional[Span]) -> None:
        if name not in self.order:
            message = f"Undefined field '{name}' in {what}"
            self.fail(DIAG_UNDEFINED_REFERENCE, message, span)
        elif self.order[name] >= self.seen_fields:
            self.fail(
                DIAG_FORWARD_REFERENCE,
                f"Forward reference to '{name}' in {what}; "
                "fields may only refer to earlier fields",
                span,
            )
        else:
            message = f"Field '{name}' is not on the path of {what}"
            self.fail(DIAG_OUT_OF_SCOPE_REFERENCE, message, span)

    def expr_type(
        self, expr: Expr, visible: Scope, span: Optional[Span], what: str
    ) -> Optional[str]:
        """'int', 'bool', or None after a reported problem."""
        return self._type(expr, visible, span, what)

    def _type(
        self, expr: Expr, visible: Scope, span: Optional[Span], what: str
    ) -> Optional[str]:
        if isinstance(expr, (IntLit, TotalLen)):
            return "int"
        if isinstance(expr, FieldRef):
            fdef = visible.get(expr.name)
            if fdef is None:
                self.report_reference(expr.name, what, span)
                return None
            if isinstance(fdef.type, Bytes):
                message = f"Byte array '{expr.name}' cannot be used in {what}"
                self.fail(DIAG_TYPE_ERROR, message, span)
                return None
            return "int"
        if isinstance(expr, Not):
            inner = self._type(expr.operand, visible, span, what)
            if inner == "int":
                message = f"'not' needs a condition in {what}"
                self.fail(DIAG_TYPE_ERROR, message, span)
            return "bool"
        left = self._type(expr.left, visible, span, what)
        right = self._type(expr.right, visible, span, what)
        if expr.op in BOOL_OPS:
            if "int" in (left, right):
                message = f"'{expr.op}' needs conditions on both sides in {what}"
                self.fail(DIAG_TYPE_ERROR, message, span)
            return "bool"
        if "bool" in (left, right):
            message = f"'{expr.op}' needs integer operands in {what}"
            self.fail(DIAG_TYPE_ERROR, message, span)
        if expr.op in COMPARE_OPS:
            return "bool"
        if expr.op in ARITH_OPS:
            return "int"
        self.fail(DIAG_TYPE_ERROR, f"Unknown operator '{expr.op}' in {what}", span)
        return None


def validate_spec(spec: FormatSpec) -> List[Diagnostic]:
    """Every invariant violation of ``spec`` as a diagnostic; empty when well formed."""
    diagnostics = _Validator(spec).run()
    logger.debug(f"validate_spec({spec.name}): {len(diagnostics)} diagnostics")
    return diagnostics
