"""
Generates a standalone Python parsing module for a FormatSpec.

The module speaks the harness wire protocol and decodes exactly the way the
reference checker does: the whole structure first, then the constraints. With
CHEWSPEC_TRACE=1 it reports every constraint it evaluates. It imports nothing
from chewspec.
"""

import logging
from typing import List

from chewspec.constants import TRACE_END_MARKER, TRACE_ENV_VAR
from chewspec.pfs.canonical import spec_digest
from chewspec.pfs.model import (
    BinOp,
    Conditional,
    Expr,
    FieldRef,
    FormatSpec,
    IntLit,
    Not,
    Record,
    Section,
    TotalLen,
    UInt,
)

logger = logging.getLogger(__name__)

INDENT = "    "

_PRELUDE = '''#!/usr/bin/env python3
"""Isolated parsing module for format '{name}' (spec digest {digest})."""

import os
import sys

TRACE = os.environ.get("{trace_var}") == "1"


class Reject(Exception):
    pass


class Reader:
    def __init__(self, data):
        self.data = data
        self.value = int.from_bytes(data, "big")
        self.bits = 8 * len(data)
        self.pos = 0

    def uint(self, width):
        if self.pos + width > self.bits:
            raise Reject()
        shift = self.bits - self.pos - width
        self.pos += width
        return (self.value >> shift) & ((1 << width) - 1)

    def raw(self, count):
        if count < 0 or self.pos % 8 or self.pos + 8 * count > self.bits:
            raise Reject()
        start = self.pos // 8
        self.pos += 8 * count
        return self.data[start:start + count]


def check(trace, cid, ok):
    trace.append((cid, bool(ok)))
    if not ok:
        raise Reject()

'''

_MAIN = '''

def main():
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        header = stdin.read(4)
        if not header:
            return 0
        if len(header) < 4:
            return 1
        size = int.from_bytes(header, "big")
        data = stdin.read(size)
        if len(data) < size:
            return 1
        trace = []
        try:
            parse(data, trace)
            accepted = True
        except Reject:
            accepted = False
        if TRACE:
            for cid, ok in trace:
                sys.stderr.write("CHECK %s %d\\n" % (cid, ok))
            sys.stderr.write("{end_marker}\\n")
            sys.stderr.flush()
        stdout.write(b"1\\n" if accepted else b"0\\n")
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
'''


def python_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, FieldRef):
        return f"env[{expr.name!r}]"
    if isinstance(expr, TotalLen):
        return "total"
    if isinstance(expr, Not):
        return f"(not {python_expr(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({python_expr(expr.left)} {expr.op} {python_expr(expr.right)})"
    raise TypeError(f"Unsupported expression node {type(expr).__name__}")


class _Emitter:
    def __init__(self) -> None:
        self.lines: List[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(INDENT * depth + text)

    def block(self, sections, depth: int) -> None:
        before = len(self.lines)
        for section in sections:
            self.section(section, depth)
        if len(self.lines) == before:
            self.emit(depth, "pass")

    def section(self, section: Section, depth: int) -> None:
        if isinstance(section, Record):
            for fdef in section.fields:
                if isinstance(fdef.type, UInt):
                    self.emit(depth, f"env[{fdef.name!r}] = r.uint({fdef.type.bits})")
                else:
                    self.emit(depth, f"r.raw({python_expr(fdef.type.length)})")
                for c in fdef.constraints:
                    test = python_expr(c.expr)
                    self.emit(depth, f"pending.append(({c.id!r}, lambda: {test}))")
        elif isinstance(section, Conditional):
            self.emit(depth, f"if {python_expr(section.guard.expr)}:")
            self.block(section.body, depth + 1)
        else:
            disc = f"env[{section.discriminator!r}]"
            keyword = "if"
            for arm in section.arms:
                self.emit(depth, f"{keyword} {disc} == {arm.tag}:")
                self.block(arm.body, depth + 1)
                keyword = "elif"
            if not section.arms:
                if section.default is None:
                    self.emit(depth, "raise Reject()")
                else:
                    self.block(section.default, depth)
                return
            self.emit(depth, "else:")
            if section.default is None:
                self.emit(depth + 1, "raise Reject()")
            else:
                self.block(section.default, depth + 1)


def emit_python_module(spec: FormatSpec) -> str:
    """Source of a standalone module equivalent to ``check_packet(spec, .)``."""
    emitter = _Emitter()
    emitter.emit(0, "def parse(data, trace):")
    emitter.emit(1, "r = Reader(data)")
    emitter.emit(1, "total = len(data)")
    emitter.emit(1, "env = {}")
    emitter.emit(1, "pending = []")
    emitter.block(spec.sections, 1)
    emitter.emit(1, "if r.pos != r.bits:")
    emitter.emit(2, "raise Reject()")
    emitter.emit(1, "for cid, test in pending:")
    emitter.emit(2, "check(trace, cid, test())")
    for c in spec.constraints:
        emitter.emit(1, f"check(trace, {c.id!r}, {python_expr(c.expr)})")
    prelude = _PRELUDE.format(
        name=spec.name, digest=spec_digest(spec)[:16], trace_var=TRACE_ENV_VAR
    )
    body = "\n".join(emitter.lines)
    main = _MAIN.format(end_marker=TRACE_END_MARKER)
    source = prelude + "\n" + body + "\n" + main
    logger.debug(f"Emitted {len(emitter.lines)} parse lines for '{spec.name}'")
    return source
