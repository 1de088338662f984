from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from chewspec.utils import json_line, sha256_hex


@dataclass(frozen=True)
class Definition:
    """One definition site: a function, type, macro or file-scope global."""

    name: str
    kind: str
    file: str  # repo-relative, forward slashes
    start: int  # byte offsets into the file
    end: int
    line: int  # 1-based
    text: str

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    @property
    def provenance(self) -> str:
        return f"{self.file}:{self.line}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "file": self.file,
            "span": [self.start, self.end],
            "line": self.line,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Definition":
        start, end = data["span"]
        return cls(
            data["name"],
            data["kind"],
            data["file"],
            start,
            end,
            data["line"],
            data["text"],
        )


@dataclass
class SourceIndex:
    root: Path
    language: str
    symbols: Dict[str, List[Definition]] = field(default_factory=dict)
    # relative path -> sha256 of content
    files: Dict[str, str] = field(default_factory=dict)
    trees: Dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    def add(self, definition: Definition) -> None:
        self.symbols.setdefault(definition.name, []).append(definition)

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    @property
    def digest(self) -> str:
        """Digest of the indexed file contents; any edit to an indexed file moves it."""
        return sha256_hex(json_line(dict(sorted(self.files.items()))))

    @property
    def definition_count(self) -> int:
        return sum(len(defs) for defs in self.symbols.values())

    def functions(self, name: str) -> List[Definition]:
        return [d for d in self.symbols.get(name, []) if d.kind == "function"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "language": self.language,
            "files": dict(sorted(self.files.items())),
            "symbols": {
                name: [d.to_dict() for d in defs]
                for name, defs in sorted(self.symbols.items())
            },
        }


@dataclass
class ContextBundle:
    """Definitions retrieved for an entry function, in retrieval order."""

    entry: str
    entries: List[Definition] = field(default_factory=list)
    # still to resolve when the budget ran out
    frontier: List[str] = field(default_factory=list)
    # referenced but not defined in the repo
    external: List[str] = field(default_factory=list)

    def has(self, name: str, kind: Optional[str] = None) -> bool:
        return any(
            d.name == name and (kind is None or d.kind == kind) for d in self.entries
        )

    @property
    def names(self) -> List[str]:
        return [d.name for d in self.entries]

    def add(self, definition: Definition) -> bool:
        if self.has(definition.name, definition.kind):
            return False
        self.entries.append(definition)
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entry": self.entry,
            "entries": [d.to_dict() for d in self.entries],
            "frontier": list(self.frontier),
            "external": list(self.external),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ContextBundle":
        return cls(
            entry=data["entry"],
            entries=[Definition.from_dict(d) for d in data.get("entries", [])],
            frontier=list(data.get("frontier", [])),
            external=list(data.get("external", [])),
        )

    def to_prompt(self) -> str:
        """Definitions as source text, each headed by its provenance."""
        blocks = [
            f"--- {d.kind} {d.name} @ {d.provenance}\n{d.text.rstrip()}"
            for d in self.entries
        ]
        return "\n\n".join(blocks) + "\n"
