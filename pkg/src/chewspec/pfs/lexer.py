"""Tokenizer for PFS source text."""

import logging
from dataclasses import dataclass
from typing import List, Tuple

from chewspec.constants import (
    DIAG_LEXICAL,
    DIAG_UNKNOWN_OPERATOR,
    KEYWORDS,
    OPERATOR_HINTS,
)
from chewspec.pfs.diagnostics import Diagnostic, error
from chewspec.pfs.model import Span

logger = logging.getLogger(__name__)

PUNCTUATION = {"{", "}", "(", ")", "[", "]", ":", ";", ","}
OPERATORS = ("==", "!=", "<=", ">=", "=>", "<", ">", "+", "-", "*")
# Longest first; anything here is reported rather than silently split.
UNKNOWN_OPERATORS = (
    "=>=",
    "&&",
    "||",
    "<<",
    ">>",
    "=<",
    "**",
    "=",
    "!",
    "&",
    "|",
    "/",
    "%",
    "^",
    "~",
)
OPERATOR_CHARS = set("=!<>+-*&|/%^~")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | keyword | punct | op | eof
    text: str
    span: Span

    @property
    def value(self) -> int:
        return int(self.text, 0)


def tokenize(text: str) -> Tuple[List[Token], List[Diagnostic]]:
    """Split ``text`` into tokens; lexical problems become diagnostics."""
    tokens: List[Token] = []
    diagnostics: List[Diagnostic] = []
    line, col, i = 1, 1, 0
    n = len(text)

    def span(start_line: int, start_col: int) -> Span:
        return Span(start_line, start_col, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue

        start_line, start_col = line, col
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, span(start_line, start_col)))
            continue

        if ch.isascii() and ch.isdigit():
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            try:
                int(word, 0)
            except ValueError:
                message = f"Malformed integer literal '{word}'"
                here = span(start_line, start_col)
                diagnostics.append(error(DIAG_LEXICAL, message, here))
                continue
            tokens.append(Token("int", word, span(start_line, start_col)))
            continue

        if ch in PUNCTUATION:
            i, col = i + 1, col + 1
            tokens.append(Token("punct", ch, span(start_line, start_col)))
            continue

        if ch in OPERATOR_CHARS:
            matched = _match_operator(text, i)
            width = len(matched)
            i, col = i + width, col + width
            if matched in OPERATORS:
                tokens.append(Token("op", matched, span(start_line, start_col)))
            else:
                hint = OPERATOR_HINTS.get(matched)
                suffix = f"; did you mean '{hint}'?" if hint else ""
                diagnostics.append(
                    error(
                        DIAG_UNKNOWN_OPERATOR,
                        f"Unknown operator '{matched}'{suffix}",
                        span(start_line, start_col),
                    )
                )
            continue

        i, col = i + 1, col + 1
        here = span(start_line, start_col)
        diagnostics.append(error(DIAG_LEXICAL, f"Unexpected character {ch!r}", here))

    tokens.append(Token("eof", "", Span(line, col, line, col)))
    logger.debug(
        f"Tokenized {len(tokens)} tokens with {len(diagnostics)} lexical diagnostics"
    )
    return tokens, diagnostics


def _match_operator(text: str, i: int) -> str:
    for candidate in UNKNOWN_OPERATORS[:3]:
        if text.startswith(candidate, i):
            return candidate
    for candidate in OPERATORS[:5]:
        if text.startswith(candidate, i):
            return candidate
    for candidate in UNKNOWN_OPERATORS[3:]:
        if text.startswith(candidate, i):
            return candidate
    return text[i]
