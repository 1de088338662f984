"""
Recursive-descent parser for PFS.

Grammar (see docs/pfs-grammar.md for the full EBNF)::

    spec    = "format" IDENT block
    block   = "{" item* "}"
    item    = field | where | if | switch
    field   = IDENT ":" type ["where" expr ("," expr)*] ";"
    type    = UINT | "bytes" "[" expr "]"
    where   = "where" expr ";"            (format level only)
    if      = "if" expr block
    switch  = "switch" IDENT "{" arm* "}"
    arm     = (INT | "default") "=>" block [","]
"""

import logging
import re
from typing import List, Optional, Tuple

from chewspec.constants import DIAG_EMPTY_RECORD, DIAG_SYNTAX, TOTAL_LEN
from chewspec.errors import SpecParseError
from chewspec.pfs.diagnostics import Diagnostic, error, has_errors
from chewspec.pfs.lexer import Token, tokenize
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
    Span,
    TotalLen,
    UInt,
    Variant,
)

logger = logging.getLogger(__name__)

UINT_TYPE = re.compile(r"^u([0-9]+)$")
COMPARE = ("==", "!=", "<", "<=", ">", ">=")


class _SyntaxFailure(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.globals: List[Constraint] = []

    # token helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def check(self, text: str) -> bool:
        tok = self.current
        return tok.kind in ("punct", "op", "keyword") and tok.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.check(text):
            return self.advance()
        return None

    def expect(self, text: str, context: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self._describe(self.current)
            self.fail(f"Expected '{text}' {context}, found {found}")
        return tok

    def expect_ident(self, context: str) -> Token:
        tok = self.current
        if tok.kind != "ident":
            self.fail(f"Expected identifier {context}, found {self._describe(tok)}")
        return self.advance()

    def fail(self, message: str, span: Optional[Span] = None) -> None:
        raise _SyntaxFailure(error(DIAG_SYNTAX, message, span or self.current.span))

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else f"'{tok.text}'"

    @staticmethod
    def _join(start: Span, end: Span) -> Span:
        return Span(start.line, start.column, end.end_line, end.end_column)

    # grammar

    def parse_spec(self) -> FormatSpec:
        start = self.expect("format", "at start of spec").span
        name = self.expect_ident("after 'format'").text
        sections, end = self.parse_block(top_level=True)
        if self.current.kind != "eof":
            self.fail(f"Unexpected {self._describe(self.current)} after end of format")
        span = self._join(start, end)
        return FormatSpec(name, sections, tuple(self.globals), span=span)

    def parse_block(self, top_level: bool = False) -> Tuple[Tuple[Section, ...], Span]:
        open_tok = self.expect("{", "to open a block")
        sections: List[Section] = []
        fields: List[FieldDef] = []

        def flush() -> None:
            if fields:
                span = self._join(fields[0].span, fields[-1].span)
                sections.append(Record(tuple(fields), span=span))
                fields.clear()

        while not self.check("}"):
            tok = self.current
            if tok.kind == "eof":
                self.fail("Unterminated block; expected '}'")
            if tok.kind == "keyword" and tok.text == "where":
                if not top_level:
                    self.fail(
                        "Standalone 'where' is only allowed at format level; "
                        "attach it to a field"
                    )
                self.advance()
                self.globals.append(self.parse_constraint())
                self.expect(";", "after constraint")
            elif tok.kind == "keyword" and tok.text == "if":
                flush()
                sections.append(self.parse_if())
            elif tok.kind == "keyword" and tok.text == "switch":
                flush()
                sections.append(self.parse_switch())
            else:
                fields.append(self.parse_field())
        close_tok = self.advance()
        flush()
        span = self._join(open_tok.span, close_tok.span)
        if not sections:
            message = "Empty record: a block must declare at least one field"
            raise _SyntaxFailure(error(DIAG_EMPTY_RECORD, message, span))
        return tuple(sections), span

    def parse_field(self) -> FieldDef:
        name_tok = self.expect_ident("as field name")
        self.expect(":", f"after field name '{name_tok.text}'")
        ftype = self.parse_type()
        constraints: List[Constraint] = []
        if self.accept("where"):
            constraints.append(self.parse_constraint())
            while self.accept(","):
                constraints.append(self.parse_constraint())
        end_tok = self.expect(";", f"after field '{name_tok.text}'")
        span = self._join(name_tok.span, end_tok.span)
        return FieldDef(name_tok.text, ftype, tuple(constraints), span=span)

    def parse_type(self):
        tok = self.current
        if tok.kind == "keyword" and tok.text == "bytes":
            self.advance()
            self.expect("[", "after 'bytes'")
            length = self.parse_expr()
            self.expect("]", "to close byte-array length")
            return Bytes(length)
        if tok.kind == "ident":
            match = UINT_TYPE.match(tok.text)
            if match:
                self.advance()
                return UInt(int(match.group(1)))
        found = self._describe(tok)
        self.fail(f"Expected a type ('uN' or 'bytes[expr]'), found {found}")

    def parse_if(self) -> Conditional:
        start = self.advance().span
        guard = self.parse_constraint()
        body, end = self.parse_block()
        return Conditional(guard, body, span=self._join(start, end))

    def parse_switch(self) -> Variant:
        start = self.advance().span
        disc = self.expect_ident("as switch discriminator").text
        self.expect("{", "to open switch arms")
        arms: List[Arm] = []
        default: Optional[Tuple[Section, ...]] = None
        while not self.check("}"):
            tok = self.current
            if tok.kind == "keyword" and tok.text == "default":
                self.advance()
                self.expect("=>", "after 'default'")
                if default is not None:
                    self.fail("Duplicate default arm", tok.span)
                default, _ = self.parse_block()
            elif tok.kind == "int":
                self.advance()
                self.expect("=>", f"after arm tag {tok.text}")
                body, end = self.parse_block()
                arms.append(Arm(tok.value, body, span=self._join(tok.span, end)))
            else:
                self.fail(f"Expected arm tag or 'default', found {self._describe(tok)}")
            self.accept(",")
        end = self.advance().span
        arms.sort(key=lambda arm: arm.tag)
        return Variant(disc, tuple(arms), default, span=self._join(start, end))

    def parse_constraint(self) -> Constraint:
        start = self.current.span
        expr = self.parse_expr()
        end = self.tokens[self.pos - 1].span
        return Constraint(expr, span=self._join(start, end))

    # expressions, loosest binding first

    def parse_expr(self) -> Expr:
        left = self.parse_and()
        while self.accept("or"):
            left = BinOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.accept("and"):
            left = BinOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.accept("not"):
            return Not(self.parse_not())
        return self.parse_compare()

    def parse_compare(self) -> Expr:
        left = self.parse_sum()
        tok = self.current
        if tok.kind == "op" and tok.text in COMPARE:
            self.advance()
            left = BinOp(tok.text, left, self.parse_sum())
            nxt = self.current
            if nxt.kind == "op" and nxt.text in COMPARE:
                self.fail("Comparisons do not chain; combine them with 'and'")
        return left

    def parse_sum(self) -> Expr:
        left = self.parse_term()
        while self.current.kind == "op" and self.current.text in ("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> Expr:
        left = self.parse_atom()
        while self.current.kind == "op" and self.current.text == "*":
            self.advance()
            left = BinOp("*", left, self.parse_atom())
        return left

    def parse_atom(self) -> Expr:
        tok = self.current
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.value)
        if tok.kind == "keyword" and tok.text == TOTAL_LEN:
            self.advance()
            return TotalLen()
        if tok.kind == "ident":
            self.advance()
            return FieldRef(tok.text)
        if self.accept("("):
            inner = self.parse_expr()
            self.expect(")", "to close parenthesized expression")
            return inner
        self.fail(f"Expected an expression, found {self._describe(tok)}")


def parse_source(text: str) -> Tuple[Optional[FormatSpec], List[Diagnostic]]:
    """Syntax-only parse; returns the spec (or None) plus lexical/syntax diagnostics."""
    tokens, diagnostics = tokenize(text)
    if has_errors(diagnostics):
        return None, diagnostics
    try:
        spec = _Parser(tokens).parse_spec()
    except _SyntaxFailure as failure:
        logger.debug(f"Syntax failure: {failure.diagnostic}")
        return None, diagnostics + [failure.diagnostic]
    return spec, diagnostics


def check_source(text: str) -> List[Diagnostic]:
    """All diagnostics for PFS or canonical JSON text, empty when it is clean."""
    try:
        spec = parse_spec(text)
    except SpecParseError as exc:
        return list(exc.diagnostics)
    from chewspec.pfs.validator import validate_spec

    return validate_spec(spec)


def parse_spec(text: str) -> FormatSpec:
    """Parse PFS source, or the canonical JSON form, into a validated FormatSpec.

    Raises SpecParseError carrying every error diagnostic. Warnings are logged.
    """
    from chewspec.pfs.canonical import load_canonical, looks_canonical
    from chewspec.pfs.validator import validate_spec

    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if looks_canonical(text):
        spec = load_canonical(text)
    else:
        spec, diagnostics = parse_source(text)
        if spec is None:
            raise SpecParseError(diagnostics)
    diagnostics = validate_spec(spec)
    for diag in diagnostics:
        if not diag.is_error:
            logger.warning(f"{spec.name}: {diag}")
    errors = [d for d in diagnostics if d.is_error]
    if errors:
        raise SpecParseError(errors)
    logger.debug(f"Parsed spec '{spec.name}' with {spec.field_count} fields")
    return spec


def parse_constraint(text: str) -> Constraint:
    """Parse a standalone constraint expression such as ``"length >= 24"``."""
    tokens, diagnostics = tokenize(text)
    if has_errors(diagnostics):
        raise SpecParseError(diagnostics)
    parser = _Parser(tokens)
    try:
        constraint = parser.parse_constraint()
        if parser.current.kind != "eof":
            found = parser._describe(parser.current)
            parser.fail(f"Unexpected {found} after expression")
    except _SyntaxFailure as failure:
        raise SpecParseError([failure.diagnostic]) from None
    return constraint
