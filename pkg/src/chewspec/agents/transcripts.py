"""
Model transcripts: one JSON line per turn, one file per session.

A turn stores the digest of the request that produced it (``null`` for a
hand-written, unpinned turn) and the response. A transcript may also carry
the context digest of the inputs its session started from; it is repeated
on every line.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Union

from chewspec._version import SCHEMA_VERSION
from chewspec.agents.backend import ModelResponse
from chewspec.errors import ConfigError
from chewspec.utils import json_line, safe_write

logger = logging.getLogger(__name__)

TRANSCRIPT_SUFFIX = ".jsonl"


@dataclass(frozen=True)
class TranscriptTurn:
    index: int
    request_digest: Optional[str]
    response: ModelResponse

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "turn": self.index,
            "request_digest": self.request_digest,
            "response": self.response.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TranscriptTurn":
        response = ModelResponse.from_dict(data["response"])
        return cls(int(data["turn"]), data.get("request_digest"), response)


@dataclass
class ModelTranscript:
    session: str
    turns: List[TranscriptTurn] = field(default_factory=list)
    context_digest: Optional[str] = None

    @property
    def pinned(self) -> bool:
        return all(t.request_digest is not None for t in self.turns)

    def append(
        self, request_digest: Optional[str], response: ModelResponse
    ) -> TranscriptTurn:
        turn = TranscriptTurn(len(self.turns), request_digest, response)
        self.turns.append(turn)
        return turn

    def dumps(self) -> str:
        lines = []
        for turn in self.turns:
            data = turn.to_dict()
            if self.context_digest is not None:
                data["context_digest"] = self.context_digest
            lines.append(json_line(data) + "\n")
        return "".join(lines)

    def save(self, directory: Union[str, Path]) -> Path:
        path = transcript_path(directory, self.session)
        return safe_write(path, self.dumps(), overwrite=True)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModelTranscript":
        path = Path(path)
        session = path.stem
        if path.name.endswith(TRANSCRIPT_SUFFIX):
            session = path.name[: -len(TRANSCRIPT_SUFFIX)]
        turns: List[TranscriptTurn] = []
        contexts: Set[Optional[str]] = set()
        lines = path.read_text(encoding="utf-8").splitlines()
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                version = data.get("schema_version", SCHEMA_VERSION)
                if version != SCHEMA_VERSION:
                    raise ValueError(f"unsupported schema_version {version}")
                turn = TranscriptTurn.from_dict(data)
                contexts.add(data.get("context_digest"))
            except (ValueError, KeyError, TypeError) as exc:
                logger.error(f"❌ Bad transcript line {path}:{number}: {exc}")
                message = f"Invalid transcript {path} line {number}: {exc}"
                raise ConfigError(message) from exc
            if turn.index != len(turns):
                raise ConfigError(
                    f"Invalid transcript {path}: "
                    f"turn {turn.index} out of order at line {number}"
                )
            turns.append(turn)
        if len(contexts) > 1:
            message = f"Invalid transcript {path}: lines disagree on context_digest"
            raise ConfigError(message)
        return cls(session, turns, contexts.pop() if contexts else None)


def transcript_path(directory: Union[str, Path], session: str) -> Path:
    return Path(directory) / f"{session}{TRANSCRIPT_SUFFIX}"


def load_transcripts(directory: Union[str, Path]) -> Dict[str, ModelTranscript]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"Transcript directory not found: {directory}")
    found = {}
    for path in sorted(directory.glob(f"*{TRANSCRIPT_SUFFIX}")):
        transcript = ModelTranscript.load(path)
        found[transcript.session] = transcript
    logger.debug(f"Loaded {len(found)} transcripts from {directory}")
    return found


def save_transcripts(
    transcripts: List[ModelTranscript], directory: Union[str, Path]
) -> List[Path]:
    return [t.save(directory) for t in transcripts]
