"""
Exception hierarchy for chewspec.

Library code raises these; only the CLI turns them into exit codes.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Sequence


class ChewspecError(Exception):
    """Base class for every error raised by chewspec."""


class ConfigError(ChewspecError):
    """Invalid or incomplete pipeline configuration."""


class SpecParseError(ChewspecError):
    """PFS source (or canonical JSON) did not produce a valid FormatSpec."""

    def __init__(self, diagnostics: Sequence[Any]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else "no diagnostics"
        more = len(self.diagnostics) - 1
        suffix = f" (+{more} more)" if more > 0 else ""
        super().__init__(f"{first}{suffix}")


class EvaluationError(ChewspecError):
    """A constraint could not be evaluated, usually an unbound field."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class LayoutError(ChewspecError):
    """A layout could not be resolved for the given assignment."""


class GenerationError(ChewspecError):
    """No packet satisfying the spec was found within the retry budget."""

    def __init__(self, message: str, blocking: Sequence[str] = ()):
        self.blocking = list(blocking)
        super().__init__(message)


class RepoIndexError(ChewspecError):
    """The repository could not be indexed."""


class EntryNotFoundError(RepoIndexError):
    """The entry function does not resolve in the index."""


class AmbiguousEntryError(RepoIndexError):
    """The entry function resolves to more than one definition."""

    def __init__(self, name: str, candidates: Sequence[str]):
        self.name = name
        self.candidates = list(candidates)
        listing = ", ".join(self.candidates)
        super().__init__(f"Entry '{name}' is ambiguous: {listing}")


class SnippetParseError(RepoIndexError):
    """A source snippet does not parse under the language profile."""


class HarnessError(ChewspecError):
    """Base class for build and run failures of isolated modules."""


class BuildConfigError(HarnessError):
    """No usable build command is configured."""


class BuildTimeoutError(HarnessError):
    """The build command exceeded its time budget."""


class ExecutableMissingError(HarnessError):
    """The module executable does not exist."""


class AgentError(ChewspecError):
    """Base class for failures in the agent layer."""


class BackendError(AgentError):
    """The model backend failed or returned an unusable response."""


class DriftError(AgentError):
    """A replayed request no longer matches the recorded transcript."""


class ToolError(AgentError):
    """A tool invocation was rejected or failed."""


class BudgetExhaustedError(AgentError):
    """An agent loop ran out of iterations before its postcondition held."""

    def __init__(self, message: str, diagnostics: Any = None, report: Any = None):
        self.diagnostics = diagnostics
        self.report = report
        super().__init__(message)


class SpecExtractionError(AgentError):
    """Spec extraction ended without a usable spec."""

    def __init__(self, message: str, diagnostics: Sequence[Any] = ()):
        self.diagnostics = list(diagnostics)
        super().__init__(message)


class PipelineError(ChewspecError):
    """A pipeline stage failed; carries the stage name and the partial manifest."""

    def __init__(
        self,
        stage: str,
        cause: BaseException,
        manifest: Optional[Dict[str, Any]] = None,
        manifest_path: Optional[Path] = None,
    ):
        self.stage = stage
        self.cause = cause
        self.manifest = manifest or {}
        self.manifest_path = manifest_path
        super().__init__(f"Stage '{stage}' failed: {cause}")

