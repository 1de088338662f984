from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from chewspec.pfs.model import Span


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    location: Optional[Span] = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        where = f"{self.location}: " if self.location else ""
        return f"{where}{self.severity}[{self.code}]: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        loc = self.location
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "location": None
            if loc is None
            else [loc.line, loc.column, loc.end_line, loc.end_column],
        }


def error(code: str, message: str, location: Optional[Span] = None) -> Diagnostic:
    return Diagnostic("error", code, message, location)


def warning(code: str, message: str, location: Optional[Span] = None) -> Diagnostic:
    return Diagnostic("warning", code, message, location)


def has_errors(diagnostics: Sequence[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


def render(diagnostics: Sequence[Diagnostic]) -> str:
    """One diagnostic per line, as fed back to agents."""
    lines: List[str] = [str(d) for d in diagnostics]
    return "\n".join(lines)
