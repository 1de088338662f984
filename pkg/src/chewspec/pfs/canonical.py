"""
Canonical forms of a FormatSpec.

``serialize_canonical`` produces the deterministic JSON document described by
docs/spec-schema.json. ``format_spec`` pretty-prints normalized PFS source.
Both are pure; structurally equal specs give byte-identical output.
"""

import json
import logging
from typing import Any, Dict, List, Optional, Tuple

from chewspec._version import SCHEMA_VERSION
from chewspec.constants import DIAG_SYNTAX, TOTAL_LEN
from chewspec.errors import SpecParseError
from chewspec.pfs.diagnostics import error
from chewspec.pfs.model import (
    Arm,
    BinOp,
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
    TotalLen,
    UInt,
    Variant,
    expr_text,
)
from chewspec.utils import canonical_json, sha256_hex

logger = logging.getLogger(__name__)

INDENT = "    "


def looks_canonical(text: str) -> bool:
    return text.lstrip().startswith("{")


# JSON form


def expr_to_dict(expr: Expr) -> Dict[str, Any]:
    if isinstance(expr, IntLit):
        return {"int": expr.value}
    if isinstance(expr, FieldRef):
        return {"field": expr.name}
    if isinstance(expr, TotalLen):
        return {"builtin": TOTAL_LEN}
    if isinstance(expr, Not):
        return {"op": "not", "args": [expr_to_dict(expr.operand)]}
    return {"op": expr.op, "args": [expr_to_dict(expr.left), expr_to_dict(expr.right)]}


def constraint_to_dict(c: Constraint) -> Dict[str, Any]:
    return {"id": c.id, "text": c.text, "expr": expr_to_dict(c.expr)}


def _field_to_dict(f: FieldDef) -> Dict[str, Any]:
    if isinstance(f.type, UInt):
        ftype: Dict[str, Any] = {"kind": "uint", "bits": f.type.bits}
    else:
        ftype = {"kind": "bytes", "length": expr_to_dict(f.type.length)}
    return {
        "name": f.name,
        "type": ftype,
        "constraints": [constraint_to_dict(c) for c in f.constraints],
    }


def _block_to_list(sections: Tuple[Section, ...]) -> List[Dict[str, Any]]:
    out = []
    for s in sections:
        if isinstance(s, Record):
            fields = [_field_to_dict(f) for f in s.fields]
            out.append({"kind": "record", "fields": fields})
        elif isinstance(s, Conditional):
            out.append(
                {
                    "kind": "conditional",
                    "guard": constraint_to_dict(s.guard),
                    "body": _block_to_list(s.body),
                }
            )
        else:
            out.append(
                {
                    "kind": "variant",
                    "discriminator": s.discriminator,
                    "arms": [
                        {"tag": a.tag, "body": _block_to_list(a.body)}
                        for a in sorted(s.arms, key=lambda a: a.tag)
                    ],
                    "default": None if s.default is None else _block_to_list(s.default),
                }
            )
    return out


def spec_to_dict(spec: FormatSpec) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "sections": _block_to_list(spec.sections),
        "constraints": [constraint_to_dict(c) for c in spec.constraints],
    }


def serialize_canonical(spec: FormatSpec) -> str:
    """Deterministic canonical JSON text of ``spec``."""
    return canonical_json(spec_to_dict(spec))


def spec_digest(spec: FormatSpec) -> str:
    return "sha256:" + sha256_hex(serialize_canonical(spec))


def expr_from_dict(data: Dict[str, Any]) -> Expr:
    if "int" in data:
        return IntLit(int(data["int"]))
    if "field" in data:
        return FieldRef(str(data["field"]))
    if data.get("builtin") == TOTAL_LEN:
        return TotalLen()
    op, args = data["op"], data["args"]
    if op == "not":
        return Not(expr_from_dict(args[0]))
    return BinOp(op, expr_from_dict(args[0]), expr_from_dict(args[1]))


def _constraint_from_dict(data: Dict[str, Any]) -> Constraint:
    return Constraint(expr_from_dict(data["expr"]))


def _field_from_dict(data: Dict[str, Any]) -> FieldDef:
    t = data["type"]
    if t["kind"] == "uint":
        ftype = UInt(int(t["bits"]))
    else:
        ftype = Bytes(expr_from_dict(t["length"]))
    constraints = tuple(_constraint_from_dict(c) for c in data.get("constraints", []))
    return FieldDef(data["name"], ftype, constraints)


def _block_from_list(items: List[Dict[str, Any]]) -> Tuple[Section, ...]:
    sections: List[Section] = []
    for item in items:
        kind = item["kind"]
        if kind == "record":
            sections.append(Record(tuple(_field_from_dict(f) for f in item["fields"])))
        elif kind == "conditional":
            guard = _constraint_from_dict(item["guard"])
            sections.append(Conditional(guard, _block_from_list(item["body"])))
        elif kind == "variant":
            arms = sorted(
                (Arm(int(a["tag"]), _block_from_list(a["body"])) for a in item["arms"]),
                key=lambda a: a.tag,
            )
            default = item.get("default")
            if default is not None:
                default = _block_from_list(default)
            sections.append(Variant(item["discriminator"], tuple(arms), default))
        else:
            raise ValueError(f"Unknown section kind '{kind}'")
    return tuple(sections)


def load_canonical(text: str) -> FormatSpec:
    """Rebuild a FormatSpec from its canonical JSON text."""
    try:
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            version = data.get("schema_version")
            raise ValueError(f"unsupported schema_version {version!r}")
        return FormatSpec(
            data["name"],
            _block_from_list(data["sections"]),
            tuple(_constraint_from_dict(c) for c in data.get("constraints", [])),
        )
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        logger.error(f"Invalid canonical spec: {exc}")
        diagnostic = error(DIAG_SYNTAX, f"Invalid canonical spec JSON: {exc}")
        raise SpecParseError([diagnostic]) from exc


# PFS text form


def format_spec(spec: FormatSpec) -> str:
    """Normalized PFS source for ``spec``."""
    lines = [f"format {spec.name} {{"]
    _format_block(spec.sections, 1, lines)
    for c in spec.constraints:
        lines.append(f"{INDENT}where {c.text};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _format_block(sections: Tuple[Section, ...], depth: int, lines: List[str]) -> None:
    pad = INDENT * depth
    for s in sections:
        if isinstance(s, Record):
            for f in s.fields:
                where = ""
                if f.constraints:
                    where = " where " + ", ".join(c.text for c in f.constraints)
                lines.append(f"{pad}{f.name}: {f.type}{where};")
        elif isinstance(s, Conditional):
            lines.append(f"{pad}if {s.guard.text} {{")
            _format_block(s.body, depth + 1, lines)
            lines.append(f"{pad}}}")
        else:
            lines.append(f"{pad}switch {s.discriminator} {{")
            for arm in s.arms:
                _format_arm(str(arm.tag), arm.body, depth + 1, lines)
            if s.default is not None:
                _format_arm("default", s.default, depth + 1, lines)
            lines.append(f"{pad}}}")


def _format_arm(
    label: str, body: Optional[Tuple[Section, ...]], depth: int, lines: List[str]
) -> None:
    pad = INDENT * depth
    lines.append(f"{pad}{label} => {{")
    _format_block(body or (), depth + 1, lines)
    lines.append(f"{pad}}}")


__all__ = [
    "expr_text",
    "format_spec",
    "load_canonical",
    "looks_canonical",
    "serialize_canonical",
    "spec_digest",
    "spec_to_dict",
]
