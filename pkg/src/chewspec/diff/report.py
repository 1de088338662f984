"""
Report persistence and rendering
"""

import json
import logging
from pathlib import Path
from typing import Any, List, Optional

from tabulate import tabulate

from chewspec.diff.catalog import BugCatalog
from chewspec.diff.differ import Discrepancy, ValidationReport
from chewspec.diff.scoring import ExtractionScore
from chewspec.utils import canonical_json, safe_write

logger = logging.getLogger(__name__)

TABLE_FORMAT = "github"


def write_report(report: ValidationReport, path: Path) -> Path:
    count = len(report.discrepancies)
    logger.info(f"Writing report with {count} discrepancies to {path}")
    return safe_write(Path(path), canonical_json(report.to_dict()), overwrite=True)


def read_report(path: Path) -> ValidationReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ValidationReport.from_dict(data)


def _rows(discrepancies: List[Discrepancy]) -> List[List[str]]:
    return [
        [
            d.kind,
            d.location,
            d.details.get("code", ""),
            d.details.get("doc", ""),
            d.witness or "",
        ]
        for d in discrepancies
    ]


HEADERS = ["Kind", "Location", "Code", "Doc", "Witness"]
SCORE_HEADERS = ["Category", "Extracted", "Truth", "Precision", "Recall"]


def _table(rows: List[List[Any]], headers: List[str] = HEADERS) -> str:
    return tabulate(rows, headers=headers, tablefmt=TABLE_FORMAT)


def render_text(report: ValidationReport, catalog: Optional[BugCatalog] = None) -> str:
    """Human-readable report; grouped by root cause when a catalog is given."""
    title = f"# Validation report: {report.code_spec} (code) vs {report.doc_spec} (doc)"
    lines = [title, ""]
    summary = report.summary
    counts = [[kind, n] for kind, n in summary["by_kind"].items()]
    counts += [[f"[{name}]", n] for name, n in summary["by_category"].items()]
    lines.append(_table(counts, ["Discrepancy", "Count"]))
    decisions = summary["decisions"]
    lines += [
        "",
        f"Constraint decisions: {decisions['exhaustive']} exhaustive, "
        f"{decisions['sampled']} sampled",
        "",
    ]
    if report.clean:
        lines.append("No discrepancies.")
        return "\n".join(lines) + "\n"

    if catalog is None:
        lines.append(_table(_rows(report.discrepancies)))
        return "\n".join(lines) + "\n"

    coverage = catalog.coverage(report.discrepancies)
    for entry in catalog.entries:
        found = coverage[entry.id]
        mark = "covered" if found else "NOT FOUND"
        heading = f"## {entry.id} ({entry.source}, {entry.status}): {entry.description}"
        lines += [f"{heading} [{mark}]", ""]
        if found:
            lines += [_table(_rows(found)), ""]
    rest = catalog.unexplained(report.discrepancies)
    if rest:
        lines += ["## Not in catalog", "", _table(_rows(rest)), ""]
    covered = sum(1 for found in coverage.values() if found)
    lines.append(f"Catalog coverage: {covered}/{len(catalog.entries)}")
    return "\n".join(lines) + "\n"


def render_report(
    report: ValidationReport, fmt: str = "text", catalog: Optional[BugCatalog] = None
) -> str:
    if fmt == "json":
        return canonical_json(report.to_dict())
    return render_text(report, catalog)


def render_score(score: ExtractionScore, fmt: str = "text") -> str:
    if fmt == "json":
        return canonical_json(score.to_dict())
    rows = [
        [name, s.extracted, s.truth, f"{s.precision:.2%}", f"{s.recall:.2%}"]
        for name, s in score.categories.items()
    ]
    table = _table(rows, SCORE_HEADERS)
    return f"# Extraction score: {score.extracted} vs {score.truth}\n\n{table}\n"
