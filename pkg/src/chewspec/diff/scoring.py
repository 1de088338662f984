"""
Precision and recall of an extracted spec against a ground-truth spec.

Fields are paired through the offset alignment, so a field counts as
correctly named only when it sits where the ground truth puts a field of
that name.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from chewspec.diff.alignment import Alignment, Scope, align_fields
from chewspec.diff.equivalence import check_implication
from chewspec.pfs.model import Constraint, FormatSpec

logger = logging.getLogger(__name__)

CATEGORIES = ("field name", "field type", "field constraint")


@dataclass
class CategoryScore:
    extracted: int = 0
    truth: int = 0
    correct_extracted: int = 0
    correct_truth: int = 0

    @property
    def precision(self) -> float:
        return self.correct_extracted / self.extracted if self.extracted else 1.0

    @property
    def recall(self) -> float:
        return self.correct_truth / self.truth if self.truth else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "extracted": self.extracted,
            "truth": self.truth,
            "correct_extracted": self.correct_extracted,
            "correct_truth": self.correct_truth,
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
        }


@dataclass
class ExtractionScore:
    extracted: str
    truth: str
    categories: Dict[str, CategoryScore] = field(default_factory=dict)

    def __getitem__(self, category: str) -> CategoryScore:
        return self.categories[category]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "extracted": self.extracted,
            "truth": self.truth,
            "categories": {
                name: score.to_dict() for name, score in self.categories.items()
            },
        }


ScopedConstraint = Tuple[Scope, Constraint]


def _scoped_constraints(
    alignment: Alignment, side: str, spec: FormatSpec
) -> List[ScopedConstraint]:
    out: List[ScopedConstraint] = []
    for pair in alignment.scope_pairs:
        scope = pair[0] if side == "a" else pair[1]
        for e in scope.elements:
            if e.field is not None:
                out.extend((scope, c) for c in e.field.constraints)
        if not scope.key:
            out.extend((scope, c) for c in spec.constraints)
    return out


def _equivalent(
    alignment: Alignment, left: ScopedConstraint, right: ScopedConstraint
) -> bool:
    (sa, ca), (sb, cb) = left, right
    if sa.key != sb.key:
        return False
    va = alignment.variables("a", sa, [ca])
    vb = alignment.variables("b", sb, [cb])
    if va is None or vb is None or {n for n, _ in va} != {n for n, _ in vb}:
        return False
    pa, pb = alignment.predicate("a", sa, ca), alignment.predicate("b", sb, cb)
    forward = check_implication([pa], pb, va).implied
    return forward and check_implication([pb], pa, va).implied


def score_extraction(extracted: FormatSpec, truth: FormatSpec) -> ExtractionScore:
    """Score ``extracted`` against ``truth`` on field names, types and constraints."""
    alignment = align_fields(extracted, truth)
    categories = {c: CategoryScore() for c in CATEGORIES}
    score = ExtractionScore(extracted.name, truth.name, categories)
    for category in ("field name", "field type"):
        score[category].extracted = extracted.field_count
        score[category].truth = truth.field_count

    for group in alignment.pairs:
        names_a = {e.field.name.lower() for e in group.a}
        names_b = {e.field.name.lower() for e in group.b}
        names = score["field name"]
        names.correct_extracted += sum(
            1 for e in group.a if e.field.name.lower() in names_b
        )
        names.correct_truth += sum(
            1 for e in group.b if e.field.name.lower() in names_a
        )
        if len(group.a) == len(group.b) == 1:
            score["field type"].correct_extracted += 1
            score["field type"].correct_truth += 1

    ours = _scoped_constraints(alignment, "a", extracted)
    theirs = _scoped_constraints(alignment, "b", truth)
    constraints = score["field constraint"]
    constraints.extracted = sum(1 for _ in extracted.iter_constraints())
    constraints.truth = sum(1 for _ in truth.iter_constraints())
    constraints.correct_extracted = sum(
        1 for c in ours if any(_equivalent(alignment, c, t) for t in theirs)
    )
    constraints.correct_truth = sum(
        1 for t in theirs if any(_equivalent(alignment, c, t) for c in ours)
    )

    summary = ", ".join(
        f"{name} P={s.precision:.2f} R={s.recall:.2f}"
        for name, s in score.categories.items()
    )
    logger.info(f"Extraction score: {summary}")
    return score
