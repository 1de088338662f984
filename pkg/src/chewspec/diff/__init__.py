"""Differential analysis of two FormatSpecs, from field alignment to reports."""

from chewspec.diff.alignment import Alignment, FieldGroup, align_fields
from chewspec.diff.catalog import BugCatalog, BugCatalogEntry, load_catalog
from chewspec.diff.differ import Discrepancy, ValidationReport, diff_specs
from chewspec.diff.equivalence import (
    EquivalenceResult,
    Relation,
    check_implication,
    constraints_equivalent,
)
from chewspec.diff.report import (
    read_report,
    render_report,
    render_score,
    write_report,
)
from chewspec.diff.scoring import ExtractionScore, score_extraction

__all__ = [
    "Alignment",
    "BugCatalog",
    "BugCatalogEntry",
    "Discrepancy",
    "EquivalenceResult",
    "ExtractionScore",
    "FieldGroup",
    "Relation",
    "ValidationReport",
    "align_fields",
    "check_implication",
    "constraints_equivalent",
    "diff_specs",
    "load_catalog",
    "read_report",
    "render_report",
    "render_score",
    "score_extraction",
    "write_report",
]
