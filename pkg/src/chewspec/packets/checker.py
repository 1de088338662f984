"""
Reference checker: decodes a packet against a FormatSpec and decides it.

Fields are decoded in declaration order along the path selected by the bytes
themselves. Structural failures (underrun, trailing bytes, no matching arm,
negative length) are found first and reject with a structural tag. Only a
packet that decodes completely has its constraints evaluated, field
constraints in declaration order along the path and then the global ones; the
first false constraint rejects it.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from chewspec.errors import EvaluationError
from chewspec.packets.codec import BitReader
from chewspec.pfs.evaluator import evaluate_constraint, evaluate_expr
from chewspec.pfs.layout import LayoutEntry
from chewspec.pfs.model import (
    Conditional,
    Constraint,
    FieldDef,
    FormatSpec,
    PathLabel,
    Record,
    Section,
    UInt,
)
from chewspec.types import Verdict

logger = logging.getLogger(__name__)

UNDERRUN = "underrun"
OVERRUN = "overrun"
NO_ARM = "no-arm"
NEGATIVE_LENGTH = "negative-length"


@dataclass(frozen=True)
class CheckResult:
    verdict: Verdict
    failed_constraint: Optional[str] = None
    decoded: Dict[str, Union[int, bytes]] = field(default_factory=dict)
    structural: Optional[str] = None
    path: PathLabel = ()
    layout: Tuple[LayoutEntry, ...] = ()
    checks: Tuple[Tuple[str, bool], ...] = ()
    detail: str = ""

    @property
    def accepted(self) -> bool:
        return self.verdict == Verdict.ACCEPT


class _Reject(Exception):
    def __init__(
        self,
        failed: Optional[str] = None,
        structural: Optional[str] = None,
        detail: str = "",
    ):
        self.failed = failed
        self.structural = structural
        self.detail = detail


class _Decoder:
    def __init__(self, spec: FormatSpec, data: bytes):
        self.spec = spec
        self.reader = BitReader(data)
        self.total_len = len(data)
        self.decoded: Dict[str, Union[int, bytes]] = {}
        self.ints: Dict[str, int] = {}
        self.path: List[str] = []
        self.taken: List[str] = []
        self.layout: List[LayoutEntry] = []
        self.checks: List[Tuple[str, bool]] = []
        self.pending: List[Constraint] = []

    def check(self, c: Constraint) -> None:
        ok = evaluate_constraint(c, self.ints, self.total_len)
        self.checks.append((c.id, ok))
        if not ok:
            raise _Reject(failed=c.id, detail=f"constraint '{c.text}' is false")

    def run(self) -> None:
        self.block(self.spec.sections)
        if self.reader.remaining:
            trailing = self.reader.remaining // 8
            raise _Reject(structural=OVERRUN, detail=f"{trailing} trailing bytes")
        for c in self.pending + list(self.spec.constraints):
            self.check(c)

    def decode_field(self, fdef: FieldDef) -> None:
        offset = self.reader.pos
        inside = f"packet ends inside '{fdef.name}'"
        if isinstance(fdef.type, UInt):
            value = self.reader.read_uint(fdef.type.bits)
            if value is None:
                raise _Reject(structural=UNDERRUN, detail=inside)
            self.ints[fdef.name] = value
            self.decoded[fdef.name] = value
            width = fdef.type.bits
        else:
            length = int(
                evaluate_expr(fdef.type.length, self.ints, self.total_len, fdef.name)
            )
            if length < 0:
                detail = f"'{fdef.name}' length {length}"
                raise _Reject(structural=NEGATIVE_LENGTH, detail=detail)
            raw = self.reader.read_bytes(length)
            if raw is None:
                raise _Reject(structural=UNDERRUN, detail=inside)
            self.decoded[fdef.name] = raw
            width = 8 * length
        logger.debug(
            f"Decoded {fdef.name} at bit {offset}: {self.decoded[fdef.name]!r}"
        )
        self.layout.append(LayoutEntry(fdef.name, offset, width, tuple(self.path)))
        self.pending.extend(fdef.constraints)

    def block(self, sections: Tuple[Section, ...]) -> None:
        for section in sections:
            if isinstance(section, Record):
                for fdef in section.fields:
                    self.decode_field(fdef)
            elif isinstance(section, Conditional):
                guard = section.guard
                if evaluate_expr(guard.expr, self.ints, self.total_len, guard.text):
                    self.path.append(section.label)
                    self.taken.append(section.label)
                    self.block(section.body)
                    self.path.pop()
            else:
                tag = self.ints[section.discriminator]
                body = section.body_for(tag)
                if body is None:
                    detail = f"no arm for {section.discriminator}={tag}"
                    raise _Reject(structural=NO_ARM, detail=detail)
                matched = any(arm.tag == tag for arm in section.arms)
                self.path.append(section.arm_label(tag if matched else None))
                self.taken.append(self.path[-1])
                self.block(body)
                self.path.pop()


def check_packet(spec: FormatSpec, data: bytes) -> CheckResult:
    """Decode ``data`` against ``spec``; malformed input is a reject, not an error."""
    decoder = _Decoder(spec, bytes(data))
    try:
        decoder.run()
    except _Reject as rejection:
        logger.debug(f"{spec.name}: reject ({rejection.detail})")
        return CheckResult(
            Verdict.REJECT,
            failed_constraint=rejection.failed,
            decoded=decoder.decoded,
            structural=rejection.structural,
            path=tuple(decoder.taken),
            layout=tuple(decoder.layout),
            checks=tuple(decoder.checks),
            detail=rejection.detail,
        )
    except EvaluationError as exc:
        # Only reachable for specs that skipped validation.
        logger.warning(f"{spec.name}: evaluation failed while checking packet: {exc}")
        return CheckResult(
            Verdict.REJECT,
            decoded=decoder.decoded,
            structural="unbound",
            detail=str(exc),
        )
    return CheckResult(
        Verdict.ACCEPT,
        decoded=decoder.decoded,
        path=tuple(decoder.taken),
        layout=tuple(decoder.layout),
        checks=tuple(decoder.checks),
    )
