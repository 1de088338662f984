"""TestPacket and the JSON-lines packet corpus format (docs/corpus-format.md)."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from chewspec._version import SCHEMA_VERSION
from chewspec.types import Verdict
from chewspec.utils import json_line, safe_write

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestPacket:
    id: int
    data: bytes
    expectation: Verdict
    target_constraint: Optional[str] = None
    mutation: Optional[str] = None
    seed: int = 0
    path: str = ""

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        tagged = self.target_constraint or self.mutation
        if self.expectation == Verdict.REJECT and not tagged:
            raise ValueError(
                f"Negative packet {self.id} needs a target constraint or a mutation tag"
            )

    @property
    def is_positive(self) -> bool:
        return self.expectation == Verdict.ACCEPT

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "bytes": self.data.hex(),
            "expectation": str(self.expectation),
            "target_constraint": self.target_constraint,
            "mutation": self.mutation,
            "seed": self.seed,
            "path": self.path,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TestPacket":
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported corpus schema_version {version!r}")
        return cls(
            id=int(data["id"]),
            data=bytes.fromhex(data["bytes"]),
            expectation=Verdict(data["expectation"]),
            target_constraint=data.get("target_constraint"),
            mutation=data.get("mutation"),
            seed=int(data.get("seed", 0)),
            path=data.get("path", ""),
        )


def write_corpus(
    path: Path, packets: Iterable[TestPacket], overwrite: bool = True
) -> Path:
    lines = [json_line(p.to_dict()) for p in packets]
    logger.info(f"Writing {len(lines)} packets to {path}")
    text = "".join(line + "\n" for line in lines)
    return safe_write(Path(path), text, overwrite=overwrite)


def read_corpus(path: Path) -> List[TestPacket]:
    packets = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            packets.append(TestPacket.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            logger.error(f"{path}:{number}: invalid corpus line: {exc}")
            raise ValueError(f"{path}:{number}: invalid corpus line: {exc}") from exc
    logger.debug(f"Read {len(packets)} packets from {path}")
    return packets
