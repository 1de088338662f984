"""Enumeration of the discriminator-consistent layout paths of a spec."""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

from chewspec.constants import MAX_PATHS
from chewspec.pfs.model import (
    BinOp,
    Conditional,
    Constraint,
    Expr,
    FieldDef,
    FieldRef,
    FormatSpec,
    IntLit,
    Not,
    PathLabel,
    Record,
    Section,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathStep:
    """One step of a path: a field to encode, or a condition the path imposes."""

    field: Optional[FieldDef] = None
    condition: Optional[Expr] = None
    origin: str = "field"  # field | guard | select | global

    @property
    def is_field(self) -> bool:
        return self.field is not None


@dataclass(frozen=True)
class SpecPath:
    index: int
    labels: PathLabel
    steps: Tuple[PathStep, ...]

    @property
    def fields(self) -> List[FieldDef]:
        return [s.field for s in self.steps if s.field is not None]

    @property
    def conditions(self) -> List[Expr]:
        return [s.condition for s in self.steps if s.condition is not None]

    def constraints(self) -> List[Constraint]:
        """Field constraints along the path, in declaration order."""
        return [c for f in self.fields for c in f.constraints]

    def has_field(self, name: str) -> bool:
        return any(f.name == name for f in self.fields)

    @property
    def label(self) -> str:
        return " / ".join(self.labels) or "<root>"


_Partial = Tuple[PathLabel, Tuple[PathStep, ...]]


def _block(sections: Tuple[Section, ...]) -> Iterator[_Partial]:
    if not sections:
        yield (), ()
        return
    head, rest = sections[0], sections[1:]
    for labels, steps in _section(head):
        for more_labels, more_steps in _block(rest):
            yield labels + more_labels, steps + more_steps


def _section(section: Section) -> Iterator[_Partial]:
    if isinstance(section, Record):
        yield (), tuple(PathStep(field=f) for f in section.fields)
    elif isinstance(section, Conditional):
        guard = section.guard.expr
        # Guard false first, so path 0 is always the shortest layout.
        yield (), (PathStep(condition=Not(guard), origin="guard"),)
        taken = PathStep(condition=guard, origin="guard")
        for labels, steps in _block(section.body):
            yield (section.label,) + labels, (taken,) + steps
    else:
        disc = FieldRef(section.discriminator)
        for arm in section.arms:
            chosen = BinOp("==", disc, IntLit(arm.tag))
            select = PathStep(condition=chosen, origin="select")
            for labels, steps in _block(arm.body):
                yield (section.arm_label(arm.tag),) + labels, (select,) + steps
        if section.default is not None:
            excluded = tuple(
                PathStep(condition=BinOp("!=", disc, IntLit(a.tag)), origin="select")
                for a in section.arms
            )
            for labels, steps in _block(section.default):
                yield (section.arm_label(None),) + labels, excluded + steps


def enumerate_paths(spec: FormatSpec, limit: int = MAX_PATHS) -> List[SpecPath]:
    """Every combination of guard outcomes and arm choices, in a stable order.

    Global constraints are appended to every path as trailing conditions.
    """
    paths: List[SpecPath] = []
    globals_ = tuple(
        PathStep(condition=c.expr, origin="global") for c in spec.constraints
    )
    for labels, steps in _block(spec.sections):
        if len(paths) >= limit:
            logger.warning(
                f"'{spec.name}' has more than {limit} paths; "
                "the rest are not enumerated"
            )
            break
        paths.append(SpecPath(len(paths), labels, steps + globals_))
    logger.debug(f"Enumerated {len(paths)} paths of '{spec.name}'")
    return paths
