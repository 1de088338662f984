"""
The spec agent: lifting an isolated module or a standards document into PFS.

From code, the agent's proposal goes through two loops: a syntax loop that
feeds checker diagnostics back until the spec is clean, and a semantic loop
that runs generated packets through the module and feeds the mismatches
back until there are none. From a document there is no executable to ask,
so only the syntax loop runs, once per chunk and once more on the merged spec.
"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from chewspec.agents.backend import ModelBackend
from chewspec.agents.chunking import DocumentChunk, chunk_document
from chewspec.agents.prompts import format_sources, render_prompt
from chewspec.agents.replay import recording
from chewspec.agents.session import AgentSession
from chewspec.agents.tools import AuditLog, ToolRegistry, spec_tools
from chewspec.agents.transcripts import ModelTranscript
from chewspec.constants import (
    DEFAULT_NEGATIVES_PER_CONSTRAINT,
    DEFAULT_POSITIVES,
    DEFAULT_SEMANTIC_BUDGET,
    DEFAULT_SYNTAX_BUDGET,
    DIAG_EMPTY_SPEC,
    ERROR_TEMPLATES,
    NO_FORMAT_REPLY,
)
from chewspec.errors import BudgetExhaustedError, SpecExtractionError
from chewspec.harness.semantic import MismatchReport, semantic_check
from chewspec.pfs import diagnostics as diag
from chewspec.pfs.canonical import format_spec
from chewspec.pfs.model import (
    Arm,
    Conditional,
    FieldDef,
    FormatSpec,
    Record,
    Section,
    Variant,
)
from chewspec.pfs.parser import check_source, parse_source, parse_spec
from chewspec.pfs.validator import validate_spec
from chewspec.types import AgentRole
from chewspec.utils import sha256_hex

logger = logging.getLogger(__name__)

CODESPEC_SESSION = "codespec"
DOCSPEC_SESSION = "docspec"

_FENCE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n(.*?)```", re.DOTALL)


def extract_pfs(reply: str) -> Optional[str]:
    """The PFS text of a model reply.

    That is the first fenced block, else the whole reply; None when the model
    answers NONE.
    """
    stripped = reply.strip()
    if stripped.upper().rstrip(".") == NO_FORMAT_REPLY:
        return None
    match = _FENCE.search(reply)
    return match.group(1).strip() + "\n" if match else stripped + "\n"


@dataclass
class CodeSpecResult:
    spec: FormatSpec
    report: MismatchReport
    transcripts: List[ModelTranscript]
    syntax_rounds: int = 0
    semantic_rounds: int = 0


@dataclass
class DocSpecResult:
    spec: FormatSpec
    transcripts: List[ModelTranscript]
    chunks: List[DocumentChunk]
    fragments: List[Optional[str]] = field(default_factory=list)
    repair_rounds: int = 0


def _spec_session(
    session_id: str,
    backend: ModelBackend,
    system: str,
    budget: int,
    audit: Optional[AuditLog],
    context: Optional[str] = None,
) -> AgentSession:
    registry = ToolRegistry(spec_tools())
    return AgentSession(
        session_id,
        AgentRole.SPEC,
        backend,
        registry,
        render_prompt(system),
        budget,
        audit,
        context_digest=context,
    )


def extract_codespec(
    sources: Dict[str, str],
    executable: Union[str, Path],
    backend: ModelBackend,
    syntax_budget: int = DEFAULT_SYNTAX_BUDGET,
    semantic_budget: int = DEFAULT_SEMANTIC_BUDGET,
    seed: int = 0,
    n: int = DEFAULT_POSITIVES,
    negatives_per_constraint: int = DEFAULT_NEGATIVES_PER_CONSTRAINT,
    audit: Optional[AuditLog] = None,
    **run_options: Any,
) -> CodeSpecResult:
    """Spec of the packets the module at ``executable`` accepts, checked against it."""
    if not Path(executable).is_file():
        raise FileNotFoundError(f"Module executable not found: {executable}")
    recorder = recording(backend)
    rounds = 1 + syntax_budget + semantic_budget
    session = _spec_session(
        CODESPEC_SESSION, recorder, "codespec_system", rounds, audit
    )
    message = render_prompt("codespec", sources=format_sources(sources))
    syntax_rounds = semantic_rounds = 0

    while True:
        reply = session.ask(message)
        text = extract_pfs(reply) or ""
        if text.strip():
            found = check_source(text)
        else:
            found = [
                diag.error(DIAG_EMPTY_SPEC, "The reply contains no specification")
            ]
        if diag.has_errors(found):
            syntax_rounds += 1
            logger.info(f"🔍 Syntax round {syntax_rounds}: {len(found)} diagnostics")
            if syntax_rounds > syntax_budget:
                message_text = ERROR_TEMPLATES["budget"].format(
                    loop="syntax", budget=syntax_budget
                )
                logger.error(f"❌ {message_text}")
                raise BudgetExhaustedError(message_text, diagnostics=found)
            message = render_prompt("refine_syntax", diagnostics=diag.render(found))
            continue

        spec = parse_spec(text)
        report = semantic_check(
            spec,
            executable,
            seed=seed,
            n=n,
            negatives_per_constraint=negatives_per_constraint,
            tracing=True,
            **run_options,
        )
        if report.clean:
            logger.info(
                f"✅ CodeSpec '{spec.name}' agrees with the module ({report.summary()})"
            )
            transcripts = recorder.collect([CODESPEC_SESSION])
            return CodeSpecResult(
                spec, report, transcripts, syntax_rounds, semantic_rounds
            )
        semantic_rounds += 1
        logger.info(f"🔍 Semantic round {semantic_rounds}: {report.summary()}")
        if semantic_rounds > semantic_budget:
            message_text = ERROR_TEMPLATES["budget"].format(
                loop="semantic", budget=semantic_budget
            )
            logger.error(f"❌ {message_text}")
            raise BudgetExhaustedError(message_text, report=report)
        message = render_prompt("refine_semantic", feedback=report.feedback(spec))


# Merging per-chunk fragments


def _merge_fields(block: List[Section], incoming: Record) -> None:
    known: Dict[str, FieldDef] = {
        f.name: f for s in block if isinstance(s, Record) for f in s.fields
    }
    fresh = tuple(f for f in incoming.fields if known.get(f.name) != f)
    if not fresh:
        return
    if block and isinstance(block[-1], Record):
        block[-1] = Record(block[-1].fields + fresh)
    else:
        block.append(Record(fresh))


def _merge_arms(base: Variant, incoming: Variant) -> Variant:
    arms: Dict[int, Tuple[Section, ...]] = {arm.tag: arm.body for arm in base.arms}
    for arm in incoming.arms:
        if arm.tag in arms:
            arms[arm.tag] = merge_blocks(arms[arm.tag], arm.body)
        else:
            arms[arm.tag] = arm.body
    default = base.default
    if incoming.default is not None:
        if default is None:
            default = incoming.default
        else:
            default = merge_blocks(default, incoming.default)
    merged = tuple(Arm(tag, arms[tag]) for tag in sorted(arms))
    return Variant(base.discriminator, merged, default)


def merge_blocks(
    base: Sequence[Section], incoming: Sequence[Section]
) -> Tuple[Section, ...]:
    """Fold ``incoming`` into ``base``.

    Identical fields are kept once, conditionals with the same guard and
    switches on the same discriminator merge their bodies. Anything else is
    appended; conflicting duplicates are left for the validator to report.
    """
    block: List[Section] = list(base)
    for section in incoming:
        if isinstance(section, Record):
            _merge_fields(block, section)
            continue
        for i, existing in enumerate(block):
            if (
                isinstance(section, Conditional)
                and isinstance(existing, Conditional)
                and existing.guard == section.guard
            ):
                body = merge_blocks(existing.body, section.body)
                block[i] = Conditional(existing.guard, body)
                break
            if (
                isinstance(section, Variant)
                and isinstance(existing, Variant)
                and existing.discriminator == section.discriminator
            ):
                block[i] = _merge_arms(existing, section)
                break
        else:
            block.append(section)
    return tuple(block)


def merge_specs(
    fragments: Sequence[FormatSpec], name: Optional[str] = None
) -> FormatSpec:
    if not fragments:
        raise ValueError("Nothing to merge")
    sections: Tuple[Section, ...] = ()
    constraints = []
    for fragment in fragments:
        sections = merge_blocks(sections, fragment.sections)
        constraints.extend(c for c in fragment.constraints if c not in constraints)
    return FormatSpec(name or fragments[0].name, sections, tuple(constraints))


def _extract_chunk(
    chunk: DocumentChunk,
    name: str,
    backend: ModelBackend,
    prefix: str,
    syntax_budget: int,
    audit: Optional[AuditLog],
    context: Optional[str] = None,
) -> Tuple[str, Optional[str], Optional[FormatSpec]]:
    session_id = f"{prefix}-{chunk.index:02d}"
    session = _spec_session(
        session_id, backend, "docspec_system", 1 + syntax_budget, audit, context
    )
    message = render_prompt(
        "docspec_chunk",
        name=name,
        heading=chunk.heading or "(front matter)",
        text=chunk.text.strip(),
    )
    rounds = 0
    while True:
        text = extract_pfs(session.ask(message))
        if text is None:
            logger.debug(f"[{session_id}] no packet format in '{chunk.heading}'")
            return session_id, None, None
        fragment, found = parse_source(text)
        if fragment is not None and not diag.has_errors(found):
            logger.info(
                f"📦 [{session_id}] fragment with {fragment.field_count} fields "
                f"from '{chunk.heading}'"
            )
            return session_id, text, fragment
        rounds += 1
        if rounds > syntax_budget:
            logger.error(
                f"❌ [{session_id}] fragment still unparseable "
                f"after {syntax_budget} rounds"
            )
            message_text = ERROR_TEMPLATES["budget"].format(
                loop=f"syntax ({session_id})", budget=syntax_budget
            )
            raise SpecExtractionError(message_text, found)
        message = render_prompt("refine_syntax", diagnostics=diag.render(found))


def extract_docspec(
    document: str,
    backend: ModelBackend,
    syntax_budget: int = DEFAULT_SYNTAX_BUDGET,
    name: str = "document",
    session_prefix: str = DOCSPEC_SESSION,
    workers: int = 1,
    audit: Optional[AuditLog] = None,
) -> DocSpecResult:
    """Spec of the packet formats a document defines, merged over its chunks."""
    if not document.strip():
        raise ValueError("Document is empty")
    recorder = recording(backend)
    chunks = chunk_document(document)
    context = sha256_hex(document)
    logger.info(f"🔍 Extracting '{name}' from {len(chunks)} chunks")

    def run(chunk: DocumentChunk):
        return _extract_chunk(
            chunk, name, recorder, session_prefix, syntax_budget, audit, context
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]
    sessions = [session_id for session_id, _, _ in results]
    fragments = [fragment for _, _, fragment in results if fragment is not None]
    if not fragments:
        logger.error(f"❌ No packet format found in '{name}'")
        raise SpecExtractionError(
            f"No packet format found in {len(chunks)} chunks of '{name}'",
            [diag.error(DIAG_EMPTY_SPEC, "The document defines no packet fields")],
        )

    spec = merge_specs(fragments, name)
    found = validate_spec(spec)
    rounds = 0
    if diag.has_errors(found):
        repair_id = f"{session_prefix}-merge"
        sessions.append(repair_id)
        session = _spec_session(
            repair_id, recorder, "docspec_system", syntax_budget, audit, context
        )
        current = format_spec(spec).rstrip()
        while diag.has_errors(found):
            rounds += 1
            if rounds > syntax_budget:
                logger.error(
                    f"❌ Merged spec '{name}' still invalid after {syntax_budget} rounds"
                )
                message_text = ERROR_TEMPLATES["budget"].format(
                    loop="syntax (merge)", budget=syntax_budget
                )
                raise SpecExtractionError(message_text, found)
            logger.info(f"🔍 Merge repair round {rounds}: {len(found)} diagnostics")
            prompt = render_prompt(
                "docspec_merge", spec=current, diagnostics=diag.render(found)
            )
            text = extract_pfs(session.ask(prompt)) or ""
            current = text.rstrip()
            found = check_source(text)
            if not diag.has_errors(found):
                spec = parse_spec(text)

    logger.info(f"✅ DocSpec '{spec.name}' with {spec.field_count} fields")
    texts = [text for _, text, _ in results]
    return DocSpecResult(spec, recorder.collect(sessions), chunks, texts, rounds)
