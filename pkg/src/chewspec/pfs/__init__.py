"""PFS, the packet-format specification language, and the tools that read it."""

from chewspec.pfs.canonical import (
    format_spec,
    load_canonical,
    serialize_canonical,
    spec_digest,
)
from chewspec.pfs.diagnostics import Diagnostic
from chewspec.pfs.evaluator import evaluate_constraint, evaluate_expr
from chewspec.pfs.layout import LayoutEntry, resolve_layout
from chewspec.pfs.model import (
    Arm,
    Bytes,
    Conditional,
    Constraint,
    FieldDef,
    FormatSpec,
    Record,
    UInt,
    Variant,
)
from chewspec.pfs.parser import check_source, parse_constraint, parse_spec
from chewspec.pfs.validator import validate_spec

__all__ = [
    "Arm",
    "Bytes",
    "Conditional",
    "Constraint",
    "Diagnostic",
    "FieldDef",
    "FormatSpec",
    "LayoutEntry",
    "Record",
    "UInt",
    "Variant",
    "check_source",
    "evaluate_constraint",
    "evaluate_expr",
    "format_spec",
    "load_canonical",
    "parse_constraint",
    "parse_spec",
    "resolve_layout",
    "serialize_canonical",
    "spec_digest",
    "validate_spec",
]
