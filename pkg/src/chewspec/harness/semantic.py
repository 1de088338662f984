"""
Semantic check: does a built module accept exactly what a spec accepts?

Positives the module rejects are false rejects, negatives it accepts are
false accepts. Crashes, timeouts and protocol errors are listed separately
and also count as false rejects when they hit a positive.
"""

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from chewspec.constants import DEFAULT_NEGATIVES_PER_CONSTRAINT, DEFAULT_POSITIVES
from chewspec.harness.runner import HarnessVerdict, run_module
from chewspec.packets.checker import check_packet
from chewspec.packets.corpus import TestPacket
from chewspec.packets.generator import generate_corpus
from chewspec.pfs.model import FormatSpec
from chewspec.types import Verdict

logger = logging.getLogger(__name__)

ERROR_VERDICTS = (Verdict.CRASH, Verdict.TIMEOUT, Verdict.PROTOCOL_ERROR)


@dataclass(frozen=True)
class Mismatch:
    packet: TestPacket
    verdict: HarnessVerdict
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "packet": self.packet.to_dict(),
            "verdict": self.verdict.to_dict(),
            "note": self.note,
        }


@dataclass
class MismatchReport:
    spec_name: str
    false_rejects: List[Mismatch] = field(default_factory=list)
    false_accepts: List[Mismatch] = field(default_factory=list)
    errors: List[HarnessVerdict] = field(default_factory=list)
    verdicts: List[HarnessVerdict] = field(default_factory=list)

    @property
    def mismatch_count(self) -> int:
        return len(self.false_rejects) + len(self.false_accepts)

    @property
    def clean(self) -> bool:
        return self.mismatch_count == 0

    def summary(self) -> str:
        return (
            f"{len(self.verdicts)} packets, {len(self.false_rejects)} false rejects, "
            f"{len(self.false_accepts)} false accepts, {len(self.errors)} errors"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec_name,
            "counts": {
                "packets": len(self.verdicts),
                "false_rejects": len(self.false_rejects),
                "false_accepts": len(self.false_accepts),
                "errors": len(self.errors),
            },
            "false_rejects": [m.to_dict() for m in self.false_rejects],
            "false_accepts": [m.to_dict() for m in self.false_accepts],
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def feedback(self, spec: FormatSpec, limit: int = 5) -> str:
        """Plain-text account of the first mismatches, for the refinement prompt."""
        texts = {c.id: c.text for _, _, c in spec.iter_constraints()}
        lines = [self.summary()]
        for m in self.false_rejects[:limit]:
            packet = m.packet.data.hex()
            lines.append(f"- the module REJECTS packet {packet} that your spec accepts")
            trace = m.verdict.trace
            if trace:
                failed = [texts.get(cid, cid) for cid, ok in trace if not ok]
                lines.append(
                    f"  module trace: {len(trace)} checks, "
                    f"failing: {', '.join(failed) or 'none'}"
                )
            if m.verdict.detail:
                lines.append(f"  detail: {m.verdict.detail}")
        for m in self.false_accepts[:limit]:
            packet = m.packet.data.hex()
            lines.append(f"- the module ACCEPTS packet {packet} that your spec rejects")
            lines.append(f"  {m.note}")
        return "\n".join(lines)


def _violation_note(spec: FormatSpec, packet: TestPacket) -> str:
    result = check_packet(spec, packet.data)
    if result.failed_constraint:
        for _, _, c in spec.iter_constraints():
            if c.id == result.failed_constraint:
                return (
                    f"your spec rejects it because '{c.text}' is false; "
                    "the module does not check this"
                )
    if result.structural:
        reason = f"{result.structural}: {result.detail}"
        return f"your spec rejects it structurally ({reason})"
    return "your spec rejects it"


def compare_verdicts(
    spec: FormatSpec, packets: Sequence[TestPacket], verdicts: Sequence[HarnessVerdict]
) -> MismatchReport:
    report = MismatchReport(spec.name, verdicts=list(verdicts))
    for packet, verdict in zip(packets, verdicts):
        if verdict.verdict in ERROR_VERDICTS:
            report.errors.append(verdict)
        if packet.is_positive and verdict.verdict != Verdict.ACCEPT:
            report.false_rejects.append(Mismatch(packet, verdict))
        elif not packet.is_positive and verdict.verdict == Verdict.ACCEPT:
            note = _violation_note(spec, packet)
            report.false_accepts.append(Mismatch(packet, verdict, note))
    return report


def exhaustive_packets(spec: FormatSpec, max_bytes: int = 2) -> List[TestPacket]:
    """Every byte string up to ``max_bytes`` long, labelled by the reference checker."""
    packets: List[TestPacket] = []
    for length in range(max_bytes + 1):
        for combo in itertools.product(range(256), repeat=length):
            data = bytes(combo)
            result = check_packet(spec, data)
            if result.accepted:
                packets.append(TestPacket(len(packets), data, Verdict.ACCEPT))
                continue
            mutation = None
            if not result.failed_constraint:
                mutation = result.structural or "reject"
            packets.append(
                TestPacket(
                    len(packets),
                    data,
                    Verdict.REJECT,
                    target_constraint=result.failed_constraint,
                    mutation=mutation,
                )
            )
    return packets


def semantic_check(
    spec: FormatSpec,
    executable: Union[str, Path],
    seed: int = 0,
    n: int = DEFAULT_POSITIVES,
    negatives_per_constraint: int = DEFAULT_NEGATIVES_PER_CONSTRAINT,
    tracing: bool = False,
    packets: Optional[Sequence[TestPacket]] = None,
    **run_options: Any,
) -> MismatchReport:
    """Run generated (or given) packets through the module and compare with the spec."""
    if packets is None:
        packets = generate_corpus(spec, seed, n, negatives_per_constraint)
    verdicts = run_module(executable, packets, tracing=tracing, **run_options)
    report = compare_verdicts(spec, packets, verdicts)
    log = logger.info if report.clean else logger.warning
    log(f"Semantic check of '{spec.name}': {report.summary()}")
    return report
