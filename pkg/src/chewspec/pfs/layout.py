import logging
from typing import List, Mapping, NamedTuple, Optional, Tuple, Union

from chewspec.constants import TOTAL_LEN
from chewspec.errors import EvaluationError, LayoutError
from chewspec.pfs.evaluator import evaluate_expr
from chewspec.pfs.model import (
    Conditional,
    FieldDef,
    FormatSpec,
    PathLabel,
    Record,
    Section,
    UInt,
)

logger = logging.getLogger(__name__)

LayoutEnv = Mapping[str, Union[int, bool]]


class LayoutEntry(NamedTuple):
    name: str
    offset: int
    width: int
    path: PathLabel = ()


def resolve_layout(spec: FormatSpec, env: LayoutEnv) -> List[LayoutEntry]:
    """Bit layout of the single path of ``spec`` selected by ``env``.

    ``env`` maps variant discriminators to tag values and conditional guards
    (by normalized text, e.g. ``"a == 1"``) to outcomes. A guard not listed is
    evaluated over the integer entries of ``env``. Byte-array lengths are
    evaluated the same way; ``total_len`` may be supplied as a key.
    """
    values = {k: int(v) for k, v in env.items() if k != TOTAL_LEN}
    total = env.get(TOTAL_LEN)
    if total is not None:
        total = int(total)
    entries: List[LayoutEntry] = []
    end = _walk(spec.sections, env, values, total, (), 0, entries)
    if end % 8:
        raise LayoutError(
            f"Layout of '{spec.name}' ends {end % 8} bits past a byte boundary"
        )
    logger.debug(
        f"Resolved layout of '{spec.name}': {len(entries)} fields, {end} bits"
    )
    return entries


def _byte_width(
    fdef: FieldDef, values: Mapping[str, int], total: Optional[int], offset: int
) -> int:
    if offset % 8:
        raise LayoutError(
            f"Byte array '{fdef.name}' starts at unaligned bit offset {offset}"
        )
    where = f"bytes[{fdef.name}]"
    try:
        length = int(evaluate_expr(fdef.type.length, values, total, where))
    except EvaluationError as exc:
        raise LayoutError(f"Cannot size '{fdef.name}': {exc}") from exc
    if length < 0:
        raise LayoutError(f"Byte array '{fdef.name}' has negative length {length}")
    return 8 * length


def _walk(
    sections: Tuple[Section, ...],
    env: LayoutEnv,
    values: Mapping[str, int],
    total: Optional[int],
    path: PathLabel,
    offset: int,
    entries: List[LayoutEntry],
) -> int:
    for section in sections:
        if isinstance(section, Record):
            for fdef in section.fields:
                if isinstance(fdef.type, UInt):
                    width = fdef.type.bits
                else:
                    width = _byte_width(fdef, values, total, offset)
                entries.append(LayoutEntry(fdef.name, offset, width, path))
                offset += width
        elif isinstance(section, Conditional):
            if _guard_outcome(section, env, values, total):
                inner = path + (section.label,)
                offset = _walk(section.body, env, values, total, inner, offset, entries)
        else:
            discriminator = section.discriminator
            if discriminator not in env:
                raise LayoutError(f"Variant on '{discriminator}' is unresolved")
            tag = int(env[discriminator])
            body = section.body_for(tag)
            if body is None:
                raise LayoutError(
                    f"No arm of switch on '{discriminator}' matches {tag}"
                )
            matched = any(arm.tag == tag for arm in section.arms)
            label = section.arm_label(tag if matched else None)
            offset = _walk(body, env, values, total, path + (label,), offset, entries)
    return offset


def _guard_outcome(
    section: Conditional,
    env: LayoutEnv,
    values: Mapping[str, int],
    total: Optional[int],
) -> bool:
    text = section.guard.text
    if text in env:
        return bool(env[text])
    try:
        return bool(evaluate_expr(section.guard.expr, values, total, text))
    except EvaluationError as exc:
        raise LayoutError(f"Conditional {section.label} is unresolved: {exc}") from exc
