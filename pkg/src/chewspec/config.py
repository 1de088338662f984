"""
Configuration handling for chewspec pipelines
"""

import logging
import os
import shlex
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from chewspec.constants import (
    BUILD_PROFILES,
    DEFAULT_API_KEY_ENV,
    DEFAULT_BUILD_TIMEOUT,
    DEFAULT_ISOLATION_BUDGET,
    DEFAULT_NEGATIVES_PER_CONSTRAINT,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PACKET_TIMEOUT,
    DEFAULT_POSITIVES,
    DEFAULT_RETRIEVAL_BUDGET,
    DEFAULT_SEMANTIC_BUDGET,
    DEFAULT_STARTUP_GRACE,
    DEFAULT_SYNTAX_BUDGET,
    RETRY_BUDGET,
)
from chewspec.errors import ConfigError

try:
    # Python 3.11+ standard library
    import tomllib
except ModuleNotFoundError:
    # Fallback for Python <3.11
    import tomli as tomllib  # type: ignore

logger = logging.getLogger(__name__)


class BackendConfig(BaseModel):
    """Where model responses come from."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    mode: str = Field("replay", pattern="^(replay|live)$")
    transcripts: Optional[Path] = Field(
        None, description="Recorded transcripts for replay mode"
    )
    strict: bool = Field(False, description="Fail on unpinned transcript turns")
    endpoint: Optional[str] = None
    model: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = Field(120.0, gt=0)

    @model_validator(mode="after")
    def validate_mode(self) -> "BackendConfig":
        if self.mode == "replay" and self.transcripts is None:
            logger.error("Replay backend configured without a transcript directory")
            raise ValueError("replay mode requires backend.transcripts")
        if self.mode == "live":
            if not self.endpoint:
                logger.error("Live backend configured without an endpoint")
                raise ValueError("live mode requires backend.endpoint")
            load_dotenv()
            if not os.environ.get(self.api_key_env):
                logger.error(f"Credential variable {self.api_key_env} is not set")
                raise ValueError(
                    f"live mode requires ${self.api_key_env} in the environment"
                )
        return self


class BudgetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    isolation: int = Field(DEFAULT_ISOLATION_BUDGET, ge=0)
    syntax: int = Field(DEFAULT_SYNTAX_BUDGET, ge=0)
    semantic: int = Field(DEFAULT_SEMANTIC_BUDGET, ge=0)
    retrieval: int = Field(DEFAULT_RETRIEVAL_BUDGET, ge=0)


class GenerationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    seed: int = Field(0, ge=0, lt=1 << 64)
    positives: int = Field(DEFAULT_POSITIVES, ge=1)
    negatives_per_constraint: int = Field(DEFAULT_NEGATIVES_PER_CONSTRAINT, ge=0)
    retry_budget: int = Field(RETRY_BUDGET, ge=1)


class HarnessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    profile: str = Field("c", pattern="^(c|python|custom)$")
    build_command: Optional[List[str]] = Field(
        None, description="Build template with {output} and {sources}"
    )
    build_timeout: float = Field(DEFAULT_BUILD_TIMEOUT, gt=0)
    packet_timeout: float = Field(DEFAULT_PACKET_TIMEOUT, gt=0)
    startup_grace: float = Field(DEFAULT_STARTUP_GRACE, gt=0)
    workers: int = Field(1, ge=1)
    environment: Dict[str, str] = Field(default_factory=dict)

    @field_validator("build_command", mode="before")
    def split_build_command(cls, v: Any) -> Any:
        if isinstance(v, str):
            return shlex.split(v)
        return v

    @field_validator("build_command")
    def validate_build_command(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        if v is None:
            return v
        joined = " ".join(v)
        missing = [p for p in ("{output}", "{sources}") if p not in joined]
        if missing:
            logger.error(f"Build command lacks placeholders: {missing}")
            raise ValueError(f"build_command must contain {' and '.join(missing)}")
        return v

    @model_validator(mode="after")
    def validate_profile(self) -> "HarnessConfig":
        if self.profile == "custom" and not self.build_command:
            raise ValueError("profile 'custom' requires harness.build_command")
        return self

    def command(self) -> Optional[List[str]]:
        return self.build_command or BUILD_PROFILES.get(self.profile)

    def workspace_options(self) -> Dict[str, Any]:
        """Keyword arguments for Workspace.create."""
        return {
            "profile": self.profile,
            "build_command": self.command(),
            "build_timeout": self.build_timeout,
            "packet_timeout": self.packet_timeout,
            "startup_grace": self.startup_grace,
            "environment": dict(self.environment),
        }

    def run_options(self) -> Dict[str, Any]:
        """Keyword arguments for run_module and semantic_check."""
        return {
            "timeout": self.packet_timeout,
            "startup_grace": self.startup_grace,
            "env": dict(self.environment),
            "workers": self.workers,
        }


class PipelineConfig(BaseModel):
    """Main configuration model for chewspec"""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    name: str = Field(
        "protocol", description="Protocol name; prefixes the extracted spec names"
    )
    repo: Optional[Path] = None
    entry: Optional[str] = None
    language: str = Field("c", pattern="^(c|python)$")
    document: Optional[Path] = None
    catalog: Optional[Path] = None
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    backend: Optional[BackendConfig] = None
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    generation: GenerationConfig = Field(default_factory=GenerationConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)

    @field_validator("name")
    def validate_name(cls, v: str) -> str:
        if not v.isidentifier():
            logger.error(f"Invalid protocol name: {v}")
            raise ValueError("name must be an identifier")
        return v

    @field_validator("entry")
    def validate_entry(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not v.strip():
            raise ValueError("entry must not be blank")
        return v

    def require(self, *names: str) -> None:
        """ConfigError unless every named setting is present."""
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            names = ", ".join(missing)
            logger.error(f"Configuration lacks: {names}")
            raise ConfigError(f"Configuration lacks required setting(s): {names}")

    def with_overrides(
        self,
        replay: Optional[Path] = None,
        seed: Optional[int] = None,
        out: Optional[Path] = None,
    ) -> "PipelineConfig":
        """Copy with the CLI's --replay, --seed and --out applied."""
        data = self.model_dump()
        if replay is not None:
            backend = data.get("backend") or {}
            backend.update(mode="replay", transcripts=Path(replay))
            data["backend"] = backend
        if seed is not None:
            data["generation"]["seed"] = seed
        if out is not None:
            data["output_dir"] = Path(out)
        return PipelineConfig(**data)


INPUT_PATHS = ("repo", "document", "catalog")


def _resolve_paths(data: Dict[str, Any], base: Path) -> Dict[str, Any]:
    """Resolve input paths against ``base``; output_dir stays caller-relative."""
    resolved = dict(data)
    for key in INPUT_PATHS:
        if resolved.get(key):
            resolved[key] = base / resolved[key]
    backend = dict(resolved.get("backend") or {})
    if backend.get("transcripts"):
        backend["transcripts"] = base / backend["transcripts"]
        resolved["backend"] = backend
    return resolved


def load_config(path: Union[str, Path]) -> PipelineConfig:
    """Load a standalone TOML config, or the [tool.chewspec] table of a pyproject."""
    path = Path(path)
    logger.info(f"Loading configuration from: {path}")
    if not path.is_file():
        logger.error(f"Config file not found: {path}")
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        logger.error(f"Failed to parse TOML: {e}")
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e

    if path.name == "pyproject.toml":
        data = data.get("tool", {}).get("chewspec")
        if data is None:
            raise ConfigError(f"No [tool.chewspec] table in {path}")
    logger.debug(f"Loaded raw config data: {data}")
    try:
        return PipelineConfig(**_resolve_paths(data, path.resolve().parent))
    except ValidationError as e:
        logger.error(f"Config validation failed: {e}")
        raise ConfigError(f"Invalid configuration in {path}:\n{e}") from e
