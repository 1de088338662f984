"""
Known-bug catalog: maps root causes onto the discrepancies they produce.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from chewspec._version import SCHEMA_VERSION
from chewspec.constants import DISCREPANCY_KINDS
from chewspec.diff.differ import Discrepancy
from chewspec.errors import ConfigError

logger = logging.getLogger(__name__)


class ExpectedDiscrepancy(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: str
    location: str

    @field_validator("kind")
    def validate_kind(cls, v: str) -> str:
        if v not in DISCREPANCY_KINDS:
            logger.error(f"Invalid discrepancy kind in catalog: {v}")
            raise ValueError(f"kind must be one of {', '.join(DISCREPANCY_KINDS)}")
        return v

    def matches(self, d: Discrepancy) -> bool:
        return d.kind == self.kind and d.location == self.location


class BugCatalogEntry(BaseModel):
    """One root cause: an implementation bug (1-7) or a standard issue (R1, R2)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    description: str
    source: str = Field(pattern="^(implementation|rfc)$")
    status: str = Field("new", pattern="^(known|new)$")
    expected: List[ExpectedDiscrepancy] = Field(min_length=1)

    def matches(self, d: Discrepancy) -> bool:
        return any(e.matches(d) for e in self.expected)


class BugCatalog(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    protocol: str = ""
    entries: List[BugCatalogEntry] = Field(default_factory=list)

    @field_validator("entries")
    def validate_unique_ids(cls, v: List[BugCatalogEntry]) -> List[BugCatalogEntry]:
        ids = [e.id for e in v]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ValueError(f"Duplicate catalog ids: {', '.join(duplicates)}")
        return v

    def coverage(
        self, discrepancies: Sequence[Discrepancy]
    ) -> Dict[str, List[Discrepancy]]:
        """Entry id -> the discrepancies it explains (empty list when uncovered)."""
        return {e.id: [d for d in discrepancies if e.matches(d)] for e in self.entries}

    def uncovered(self, discrepancies: Sequence[Discrepancy]) -> List[str]:
        coverage = self.coverage(discrepancies)
        return [entry_id for entry_id, found in coverage.items() if not found]

    def unexplained(self, discrepancies: Sequence[Discrepancy]) -> List[Discrepancy]:
        return [d for d in discrepancies if not any(e.matches(d) for e in self.entries)]


def load_catalog(path: Path) -> BugCatalog:
    logger.info(f"Loading bug catalog from {path}")
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        catalog = BugCatalog(**data)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        logger.error(f"Invalid bug catalog {path}: {exc}")
        raise ConfigError(f"Invalid bug catalog {path}: {exc}") from exc
    if catalog.schema_version != SCHEMA_VERSION:
        version = catalog.schema_version
        raise ConfigError(f"Unsupported catalog schema_version {version}")
    logger.debug(f"Loaded {len(catalog.entries)} catalog entries")
    return catalog
