"""
Parser isolation: from a repository and an entry function to a standalone module.

The program-analysis agent retrieves the definitions the entry function's
parsing logic needs. The module-isolation agent then writes the module into
a workspace; after every answer the module is built and probed over the
wire protocol, and build diagnostics or probe failures go back to the agent
until it works or the budget is spent.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Set, Union

from chewspec.agents.backend import ModelBackend
from chewspec.agents.prompts import render_prompt
from chewspec.agents.replay import recording
from chewspec.agents.session import AgentSession
from chewspec.agents.tools import (
    AuditLog,
    ToolRegistry,
    retrieval_tools,
    workspace_tools,
)
from chewspec.agents.transcripts import ModelTranscript
from chewspec.constants import (
    DEFAULT_ISOLATION_BUDGET,
    ERROR_TEMPLATES,
    SOURCE_SUFFIXES,
)
from chewspec.errors import BudgetExhaustedError, SnippetParseError
from chewspec.harness.build import BuildResult, build_module
from chewspec.harness.runner import run_module
from chewspec.harness.semantic import ERROR_VERDICTS
from chewspec.harness.workspace import Workspace
from chewspec.packets.corpus import TestPacket
from chewspec.retrieval.index import expand_dependencies, index_repo, resolve_entry
from chewspec.retrieval.model import ContextBundle, SourceIndex
from chewspec.types import AgentRole, Verdict
from chewspec.utils import json_line, sha256_hex

logger = logging.getLogger(__name__)

ANALYSIS_SESSION = "isolation-analysis"
MODULE_SESSION = "isolation-module"
SOURCE_DIR = "src"

PROBES = (
    TestPacket(0, b"", Verdict.ACCEPT),
    TestPacket(1, bytes(24), Verdict.ACCEPT),
    TestPacket(2, bytes(range(64)), Verdict.ACCEPT),
)


@dataclass
class IsolationResult:
    sources: Dict[str, str]  # workspace-relative path -> text
    bundle: ContextBundle
    build: BuildResult
    workspace: Workspace
    transcripts: List[ModelTranscript]
    analysis: str
    attempts: int

    @property
    def executable(self) -> Path:
        return self.build.executable  # type: ignore[return-value]


def isolation_context(index: SourceIndex, entry: str) -> str:
    """Context digest of both isolation sessions, over the entry and the sources."""
    return sha256_hex(json_line({"entry": entry, "repo": index.digest}))


def _unretrieved(index: SourceIndex, bundle: ContextBundle) -> Set[str]:
    names: Set[str] = set()
    for definition in bundle.entries:
        try:
            names.update(expand_dependencies(index, definition))
        except SnippetParseError as exc:
            logger.warning(f"Not expanding {definition.name}: {exc}")
    return names - set(bundle.names)


def _module_sources(ws: Workspace) -> Dict[str, str]:
    return {
        path: ws.read_file(path)
        for path in ws.list_files()
        if path.startswith(f"{SOURCE_DIR}/") and "__pycache__" not in Path(path).parts
    }


def _probe(executable: Path, ws: Workspace) -> Optional[str]:
    """None when the module answers every probe with a verdict, else what went wrong."""
    verdicts = run_module(
        executable,
        PROBES,
        timeout=ws.packet_timeout,
        startup_grace=ws.startup_grace,
        env=ws.environment,
    )
    broken = [v for v in verdicts if v.verdict in ERROR_VERDICTS]
    if not broken:
        return None
    return "; ".join(
        f"probe of {len(PROBES[v.packet_id].data)} bytes gave {v.verdict} ({v.detail})"
        for v in broken
    )


def run_isolation(
    repo: Union[str, Path],
    entry: str,
    backend: ModelBackend,
    budget: int = DEFAULT_ISOLATION_BUDGET,
    language: str = "c",
    workspace: Optional[Workspace] = None,
    profile: Optional[str] = None,
    index: Optional[SourceIndex] = None,
    audit: Optional[AuditLog] = None,
) -> IsolationResult:
    """Isolate the parsing logic of ``entry``; the caller owns the workspace."""
    if budget < 1:
        message = ERROR_TEMPLATES["budget"].format(loop="isolation", budget=budget)
        logger.error(f"❌ {message}")
        raise BudgetExhaustedError(message)
    index = index or index_repo(Path(repo), language)
    root = resolve_entry(index, entry)
    ws = workspace or Workspace.create(profile=profile or language)
    audit = audit if audit is not None else AuditLog()
    recorder = recording(backend)
    context = isolation_context(index, entry)

    bundle = ContextBundle(entry=entry)
    bundle.add(root)
    registry = ToolRegistry(retrieval_tools(index, bundle) + workspace_tools(ws))

    analyst = AgentSession(
        ANALYSIS_SESSION,
        AgentRole.PROGRAM_ANALYSIS,
        recorder,
        registry,
        render_prompt("analysis_system", language=language),
        1,
        audit,
        context_digest=context,
    )
    request = render_prompt(
        "analysis",
        entry=entry,
        provenance=root.provenance,
        language=language,
        entry_source=root.text.rstrip(),
    )
    analysis = analyst.ask(request).strip()
    logger.info(
        f"🔍 Analysis retrieved {len(bundle.entries)} definitions for '{entry}'"
    )

    unretrieved = _unretrieved(index, bundle)
    isolator = AgentSession(
        MODULE_SESSION,
        AgentRole.MODULE_ISOLATION,
        recorder,
        registry,
        render_prompt("isolation_system", profile=ws.profile),
        budget,
        audit,
        context_digest=context,
    )
    message = render_prompt(
        "isolation",
        entry=entry,
        analysis=analysis or "(no analysis)",
        bundle=bundle.to_prompt(),
        frontier=", ".join(sorted(n for n in unretrieved if n in index)) or "none",
        external=", ".join(sorted(n for n in unretrieved if n not in index)) or "none",
    )
    suffixes = SOURCE_SUFFIXES.get(ws.profile, ())
    last = ""
    for attempt in range(1, budget + 1):
        isolator.ask(message)
        sources = _module_sources(ws)
        buildable = sorted(p for p in sources if p.endswith(suffixes))
        if not buildable:
            last = f"no {'/'.join(suffixes)} files under {SOURCE_DIR}/"
            message = render_prompt(
                "isolation_retry",
                problem=last,
                details="Write the module sources with write_file.",
            )
            continue
        if ws.profile == "python":
            # the launcher runs the first source; prefer a conventional entry file
            entry_files = ("main.py", "module.py")
            buildable.sort(key=lambda p: (Path(p).name not in entry_files, p))
        build = build_module(ws, buildable)
        if not build.ok:
            last = build.diagnostics.replace(f"{ws.root}/", "")
            logger.info(f"Attempt {attempt}/{budget}: build failed")
            message = render_prompt(
                "isolation_retry", problem="the build failed.", details=last.strip()
            )
            continue
        failure = _probe(build.executable, ws)
        if failure is not None:
            last = failure
            logger.info(f"Attempt {attempt}/{budget}: wire protocol probe failed")
            message = render_prompt(
                "isolation_retry",
                problem="the module does not follow the wire protocol.",
                details=failure,
            )
            continue
        logger.info(
            f"✅ Isolated '{entry}' in {attempt} attempt(s): "
            f"{', '.join(sorted(sources))}"
        )
        transcripts = recorder.collect([ANALYSIS_SESSION, MODULE_SESSION])
        return IsolationResult(
            sources, bundle, build, ws, transcripts, analysis, attempt
        )

    message = ERROR_TEMPLATES["budget"].format(loop="isolation", budget=budget)
    logger.error(f"❌ {message}")
    raise BudgetExhaustedError(message, diagnostics=last)
