"""
The end-to-end validation pipeline.

isolate -> spec-from-code -> spec-from-doc -> diff, each stage persisting its
artifacts under the output directory and recording them in manifest.json.
A failing stage leaves the manifest of what was written so far and raises
PipelineError naming the stage.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from chewspec._version import SCHEMA_VERSION, __version__
from chewspec.agents.backend import ModelBackend
from chewspec.agents.http import HttpChatBackend
from chewspec.agents.isolation import IsolationResult, run_isolation
from chewspec.agents.replay import RecordingBackend, ReplayBackend
from chewspec.agents.specagent import (
    CodeSpecResult,
    DocSpecResult,
    extract_codespec,
    extract_docspec,
)
from chewspec.agents.tools import AuditLog
from chewspec.config import BackendConfig, PipelineConfig
from chewspec.diff.catalog import load_catalog
from chewspec.diff.differ import ValidationReport, diff_specs
from chewspec.diff.report import render_report, write_report
from chewspec.errors import ChewspecError, ConfigError, PipelineError
from chewspec.harness.workspace import Workspace
from chewspec.packets.corpus import write_corpus
from chewspec.packets.generator import generate_corpus
from chewspec.pfs.canonical import format_spec, serialize_canonical
from chewspec.pfs.model import FormatSpec
from chewspec.utils import canonical_json, safe_write

logger = logging.getLogger(__name__)

STAGES = ("isolate", "spec-from-code", "spec-from-doc", "diff")
MANIFEST_NAME = "manifest.json"
AUDIT_NAME = "audit.jsonl"
TRANSCRIPT_DIR = "transcripts"


def make_backend(config: Optional[BackendConfig]) -> ModelBackend:
    if config is None:
        raise ConfigError(
            "No backend configured; pass --replay DIR or add a [backend] table"
        )
    if config.mode == "replay":
        logger.info(f"Replaying transcripts from {config.transcripts}")
        return ReplayBackend(
            config.transcripts, strict=config.strict  # type: ignore[arg-type]
        )
    model = config.model or "default model"
    logger.info(f"Using live backend {config.endpoint} ({model})")
    return HttpChatBackend(
        config.endpoint,  # type: ignore[arg-type]
        config.model,
        config.api_key_env,
        config.timeout,
    )


@dataclass
class PipelineRun:
    """Output directory bookkeeping shared by the stages of one run."""

    config: PipelineConfig
    backend: RecordingBackend
    audit: AuditLog
    stages: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @classmethod
    def open(
        cls, config: PipelineConfig, backend: Optional[ModelBackend] = None
    ) -> "PipelineRun":
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        inner = backend if backend is not None else make_backend(config.backend)
        recorder = RecordingBackend(inner, directory=out / TRANSCRIPT_DIR)
        return cls(config, recorder, AuditLog(out / AUDIT_NAME))

    @property
    def out(self) -> Path:
        return Path(self.config.output_dir)

    @property
    def manifest_path(self) -> Path:
        return self.out / MANIFEST_NAME

    def manifest(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "config": self.config.model_dump(mode="json"),
            "stages": self.stages,
            "transcripts": sorted(
                f"{TRANSCRIPT_DIR}/{s}.jsonl" for s in self.backend.transcripts
            ),
            "audit": AUDIT_NAME,
        }

    def write_manifest(self) -> Path:
        text = canonical_json(self.manifest())
        return safe_write(self.manifest_path, text, overwrite=True)

    def record(self, stage: str, relative: str) -> None:
        entry = self.stages.setdefault(stage, {"status": "running", "artifacts": []})
        entry["artifacts"].append(relative)

    def artifact(self, stage: str, relative: str, content: str) -> Path:
        path = safe_write(self.out / relative, content, overwrite=True)
        self.record(stage, relative)
        logger.debug(f"[{stage}] wrote {relative}")
        return path

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        logger.info(f"🔧 Stage {name}")
        self.stages.setdefault(name, {"status": "running", "artifacts": []})
        try:
            yield
        except (ChewspecError, OSError, ValueError) as exc:
            self.stages[name]["status"] = "failed"
            self.stages[name]["error"] = f"{type(exc).__name__}: {exc}"
            path = self.write_manifest()
            logger.error(f"❌ Stage {name} failed: {exc}")
            raise PipelineError(name, exc, self.manifest(), path) from exc
        self.stages[name]["status"] = "done"
        self.write_manifest()


def _write_spec(run: PipelineRun, stage: str, spec: FormatSpec) -> None:
    run.artifact(stage, f"specs/{spec.name}.pfs", format_spec(spec))
    run.artifact(stage, f"specs/{spec.name}.json", serialize_canonical(spec))


def isolate_stage(run: PipelineRun, workspace: Workspace) -> IsolationResult:
    config = run.config
    with run.stage("isolate"):
        config.require("repo", "entry")
        result = run_isolation(
            config.repo,  # type: ignore[arg-type]
            config.entry,  # type: ignore[arg-type]
            run.backend,
            budget=config.budgets.isolation,
            language=config.language,
            workspace=workspace,
            audit=run.audit,
        )
        for relative, text in sorted(result.sources.items()):
            run.artifact("isolate", f"module/{relative}", text)
        bundle = canonical_json(result.bundle.to_dict())
        run.artifact("isolate", "isolation/bundle.json", bundle)
        analysis = result.analysis.rstrip() + "\n"
        run.artifact("isolate", "isolation/analysis.md", analysis)
    return result


def codespec_stage(
    run: PipelineRun, sources: Dict[str, str], executable: Path
) -> CodeSpecResult:
    config = run.config
    generation = config.generation
    with run.stage("spec-from-code"):
        result = extract_codespec(
            sources,
            executable,
            run.backend,
            syntax_budget=config.budgets.syntax,
            semantic_budget=config.budgets.semantic,
            seed=generation.seed,
            n=generation.positives,
            negatives_per_constraint=generation.negatives_per_constraint,
            audit=run.audit,
            **config.harness.run_options(),
        )
        name = result.spec.name
        _write_spec(run, "spec-from-code", result.spec)
        packets = generate_corpus(
            result.spec,
            generation.seed,
            generation.positives,
            generation.negatives_per_constraint,
            generation.retry_budget,
        )
        write_corpus(run.out / f"corpus/{name}.jsonl", packets)
        run.record("spec-from-code", f"corpus/{name}.jsonl")
        report = canonical_json(result.report.to_dict())
        run.artifact("spec-from-code", f"harness/{name}.json", report)
    return result


def docspec_stage(run: PipelineRun, document: Optional[Path] = None) -> DocSpecResult:
    config = run.config
    with run.stage("spec-from-doc"):
        path = document or config.document
        if path is None:
            raise ConfigError("Configuration lacks required setting(s): document")
        result = extract_docspec(
            Path(path).read_text(encoding="utf-8"),
            run.backend,
            syntax_budget=config.budgets.syntax,
            name=f"{config.name}_doc",
            workers=config.harness.workers,
            audit=run.audit,
        )
        _write_spec(run, "spec-from-doc", result.spec)
        chunks = [
            {
                "index": c.index,
                "heading": c.heading,
                "start": c.start,
                "fragment": fragment,
            }
            for c, fragment in zip(result.chunks, result.fragments)
        ]
        run.artifact("spec-from-doc", "docspec/chunks.json", canonical_json(chunks))
    return result


def diff_stage(run: PipelineRun, code: FormatSpec, doc: FormatSpec) -> ValidationReport:
    config = run.config
    with run.stage("diff"):
        report = diff_specs(code, doc, seed=config.generation.seed)
        write_report(report, run.out / "report.json")
        run.record("diff", "report.json")
        catalog = load_catalog(config.catalog) if config.catalog else None
        run.artifact("diff", "report.txt", render_report(report, "text", catalog))
    return report


def run_pipeline(
    config: PipelineConfig, backend: Optional[ModelBackend] = None
) -> ValidationReport:
    """Run every stage; the report is also written to ``<output_dir>/report.json``."""
    run = PipelineRun.open(config, backend)
    workspace = Workspace.create(**config.harness.workspace_options())
    try:
        isolation = isolate_stage(run, workspace)
        code = codespec_stage(run, isolation.sources, isolation.executable)
        doc = docspec_stage(run)
        report = diff_stage(run, code.spec, doc.spec)
    finally:
        workspace.cleanup()
    unused: List[str] = []
    if isinstance(run.backend.inner, ReplayBackend):
        unused = run.backend.inner.unused()
    if unused:
        logger.warning(f"Transcripts never replayed: {', '.join(unused)}")
    logger.info(
        f"✅ Pipeline finished: {len(report.discrepancies)} discrepancies, "
        f"artifacts in {run.out}"
    )
    return report
