"""
Tool registry and audit log.

Agents touch the repository and the workspace only through the tools
registered for their role. Every invocation lands in the audit log; file
writes carry their full content, so a workspace can be rebuilt from the log.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Union

from chewspec.constants import ERROR_TEMPLATES
from chewspec.errors import ChewspecError, ToolError
from chewspec.harness.workspace import Workspace
from chewspec.packets.checker import check_packet
from chewspec.packets.generator import generate_positive
from chewspec.pfs import diagnostics as diag
from chewspec.pfs.parser import check_source, parse_spec
from chewspec.retrieval.index import expand_dependencies, lookup_definition
from chewspec.retrieval.model import ContextBundle, SourceIndex
from chewspec.types import AgentRole
from chewspec.utils import json_line

logger = logging.getLogger(__name__)

AUDIT_FILE = "audit.jsonl"
WRITE_TOOL = "write_file"


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    parameters: Dict[str, Any]
    handler: Callable[..., str]
    roles: FrozenSet[AgentRole]

    def schema(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": self.parameters,
        }


def _object(
    required: Dict[str, str], optional: Optional[Dict[str, str]] = None
) -> Dict[str, Any]:
    fields = {**required, **(optional or {})}
    properties = {name: {"type": kind} for name, kind in fields.items()}
    return {"type": "object", "properties": properties, "required": sorted(required)}


class ToolRegistry:
    def __init__(self, tools: Iterable[Tool] = ()):
        self.tools: Dict[str, Tool] = {}
        for tool in tools:
            self.register(tool)

    def register(self, tool: Tool) -> None:
        if tool.name in self.tools:
            raise ValueError(f"Tool '{tool.name}' registered twice")
        self.tools[tool.name] = tool

    def schemas(self, role: AgentRole) -> List[Dict[str, Any]]:
        return [t.schema() for name, t in sorted(self.tools.items()) if role in t.roles]

    def invoke(self, role: AgentRole, name: str, arguments: Dict[str, Any]) -> str:
        tool = self.tools.get(name)
        if tool is None or role not in tool.roles:
            message = ERROR_TEMPLATES["unknown_tool"].format(name=name, role=role)
            raise ToolError(message)
        spec = tool.parameters
        missing = [k for k in spec.get("required", []) if k not in arguments]
        unknown = [k for k in arguments if k not in spec.get("properties", {})]
        if missing or unknown:
            raise ToolError(
                f"Tool '{name}' called with missing {missing} / unknown {unknown} "
                "arguments"
            )
        try:
            return tool.handler(**arguments)
        except ToolError:
            raise
        except (ChewspecError, OSError, ValueError, KeyError) as exc:
            raise ToolError(f"Tool '{name}' failed: {exc}") from exc


@dataclass
class AuditLog:
    """Ordered record of tool invocations.

    Mirrored to ``audit.jsonl`` when a path is set.
    """

    path: Optional[Path] = None
    entries: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.path is not None:
            self.path = Path(self.path)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def record(
        self,
        session: str,
        role: AgentRole,
        tool: str,
        arguments: Dict[str, Any],
        ok: bool,
        result: str,
    ) -> None:
        entry = {
            "seq": len(self.entries),
            "session": session,
            "role": str(role),
            "tool": tool,
            "arguments": arguments,
            "ok": ok,
            "result": result,
        }
        self.entries.append(entry)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8", newline="\n") as handle:
                handle.write(json_line(entry) + "\n")

    def writes(self) -> List[Dict[str, Any]]:
        return [e for e in self.entries if e["tool"] == WRITE_TOOL and e["ok"]]


def replay_writes(audit_path: Union[str, Path], target: Union[str, Path]) -> List[Path]:
    """Re-apply under ``target`` every successful file write in an audit log."""
    written = []
    target = Path(target)
    workspace = Workspace(root=target.resolve())
    for line in Path(audit_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        entry = json.loads(line)
        if entry["tool"] == WRITE_TOOL and entry["ok"]:
            args = entry["arguments"]
            written.append(workspace.write_file(args["path"], args["content"]))
    logger.debug(f"Replayed {len(written)} writes into {target}")
    return written


def retrieval_tools(index: SourceIndex, bundle: ContextBundle) -> List[Tool]:
    """Lookups into the repository index; every definition returned joins ``bundle``."""
    roles = frozenset({AgentRole.PROGRAM_ANALYSIS, AgentRole.MODULE_ISOLATION})

    def lookup(name: str) -> str:
        found = lookup_definition(index, name)
        if not found:
            return f"no definition of '{name}' in the repository"
        blocks = []
        for definition in found:
            bundle.add(definition)
            header = (
                f"--- {definition.kind} {definition.name} @ {definition.provenance}"
            )
            blocks.append(f"{header}\n{definition.text.rstrip()}")
        return "\n\n".join(blocks)

    def dependencies(name: str) -> str:
        found = lookup_definition(index, name)
        if not found:
            return f"no definition of '{name}' in the repository"
        names = sorted({ref for d in found for ref in expand_dependencies(index, d)})
        local = [n for n in names if n in index]
        external = [n for n in names if n not in index]
        return (
            f"defined in repository: {', '.join(local) or '-'}\n"
            f"external: {', '.join(external) or '-'}"
        )

    return [
        Tool(
            "lookup_definition",
            "Source text and location of every definition of a symbol "
            "(function, type, macro or global).",
            _object({"name": "string"}),
            lookup,
            roles,
        ),
        Tool(
            "expand_dependencies",
            "Symbols referenced by the definitions of a symbol, "
            "split into repository and external ones.",
            _object({"name": "string"}),
            dependencies,
            roles,
        ),
    ]


def workspace_tools(ws: Workspace) -> List[Tool]:
    roles = frozenset({AgentRole.MODULE_ISOLATION})

    def write(path: str, content: str) -> str:
        ws.write_file(path, content)
        return f"wrote {path} ({len(content.encode('utf-8'))} bytes)"

    def read(path: str) -> str:
        return ws.read_file(path)

    def listing() -> str:
        return "\n".join(ws.list_files()) or "(workspace is empty)"

    return [
        Tool(
            WRITE_TOOL,
            "Create or overwrite a file in the workspace "
            "(paths relative to it, sources under src/).",
            _object({"path": "string", "content": "string"}),
            write,
            roles,
        ),
        Tool(
            "read_file",
            "Read a workspace file.",
            _object({"path": "string"}),
            read,
            roles,
        ),
        Tool("list_files", "List workspace files.", _object({}), listing, roles),
    ]


def spec_tools() -> List[Tool]:
    roles = frozenset({AgentRole.SPEC})

    def check(source: str) -> str:
        found = check_source(source)
        if diag.has_errors(found):
            return diag.render(found)
        spec = parse_spec(source)
        return f"ok: format '{spec.name}' with {spec.field_count} fields"

    def packet(source: str, packet_hex: str) -> str:
        result = check_packet(parse_spec(source), bytes.fromhex(packet_hex))
        if result.accepted:
            return "accept"
        reason = result.failed_constraint or result.structural
        return f"reject: {reason} {result.detail}".rstrip()

    def examples(source: str, count: int = 4, seed: int = 0) -> str:
        packets = generate_positive(parse_spec(source), seed, count)
        return "\n".join(p.data.hex() for p in packets)

    return [
        Tool(
            "check_spec",
            "Parse and validate PFS source; returns diagnostics or a summary.",
            _object({"source": "string"}),
            check,
            roles,
        ),
        Tool(
            "check_packet",
            "Decide a hex-encoded packet against PFS source.",
            _object({"source": "string", "packet_hex": "string"}),
            packet,
            roles,
        ),
        Tool(
            "generate_packets",
            "Hex-encoded packets that the PFS source accepts.",
            _object({"source": "string"}, {"count": "integer", "seed": "integer"}),
            examples,
            roles,
        ),
    ]
