"""
Offline replay and transcript recording.

ReplayBackend answers each request with the next recorded turn of its
session, after checking the request digest. RecordingBackend wraps any
backend and writes every response to the session transcript before the
caller sees it.
"""

import logging
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Union

from chewspec.agents.backend import ModelBackend, ModelRequest, ModelResponse
from chewspec.agents.transcripts import ModelTranscript, load_transcripts
from chewspec.constants import ERROR_TEMPLATES
from chewspec.errors import DriftError

logger = logging.getLogger(__name__)


class ReplayBackend(ModelBackend):
    """Serves recorded turns; a request that differs from the recording is drift.

    Unpinned turns (no recorded digest) are served with a warning, or
    rejected when ``strict`` is set. A transcript with a context digest only
    serves requests started from the same inputs, pinned or not.
    """

    name = "replay"

    def __init__(
        self,
        transcripts: Union[str, Path, Mapping[str, ModelTranscript]],
        strict: bool = False,
    ):
        if isinstance(transcripts, (str, Path)):
            self.source = str(transcripts)
            transcripts = load_transcripts(transcripts)
        else:
            self.source = "<memory>"
        self.transcripts: Dict[str, ModelTranscript] = dict(transcripts)
        self.strict = strict
        self.cursors: Dict[str, int] = {}
        self.lock = threading.Lock()

    def _drift(self, session: str, turn: int, reason: str) -> DriftError:
        template = ERROR_TEMPLATES["drift"]
        message = template.format(session=session, turn=turn, reason=reason)
        logger.error(f"❌ {message}")
        return DriftError(message)

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self.lock:
            turn = self.cursors.get(request.session, 0)
            self.cursors[request.session] = turn + 1
        session = request.session
        transcript = self.transcripts.get(session)
        if transcript is None:
            reason = f"no recorded transcript in {self.source}"
            raise self._drift(session, turn, reason)
        if turn >= len(transcript.turns):
            reason = f"transcript ends after {len(transcript.turns)} turns"
            raise self._drift(session, turn, reason)
        pinned_context = transcript.context_digest
        if pinned_context is not None and request.context != pinned_context:
            raise self._drift(
                session,
                turn,
                f"session inputs changed: context digest {str(request.context)[:12]} "
                f"does not match recorded {pinned_context[:12]}",
            )
        recorded = transcript.turns[turn]
        if recorded.request_digest is None:
            if self.strict:
                reason = "turn is not pinned to a request digest"
                raise self._drift(session, turn, reason)
            logger.warning(f"Replaying unpinned turn {turn} of session '{session}'")
        elif recorded.request_digest != request.digest:
            raise self._drift(
                session,
                turn,
                f"request digest {request.digest[:12]} "
                f"does not match recorded {recorded.request_digest[:12]}",
            )
        logger.debug(f"Replayed turn {turn} of session '{session}'")
        return recorded.response

    def unused(self) -> List[str]:
        """Sessions with recorded turns that were never requested."""
        with self.lock:
            return sorted(
                f"{name}[{self.cursors.get(name, 0)}:{len(t.turns)}]"
                for name, t in self.transcripts.items()
                if self.cursors.get(name, 0) < len(t.turns)
            )


class RecordingBackend(ModelBackend):
    """Pins every turn of the wrapped backend to its request digest."""

    def __init__(
        self, inner: ModelBackend, directory: Optional[Union[str, Path]] = None
    ):
        self.inner = inner
        self.name = inner.name
        self.directory = Path(directory) if directory is not None else None
        self.transcripts: Dict[str, ModelTranscript] = {}
        self.lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        response = self.inner.complete(request)
        with self.lock:
            transcript = self.transcripts.setdefault(
                request.session, ModelTranscript(request.session)
            )
            if transcript.context_digest is None:
                transcript.context_digest = request.context
            transcript.append(request.digest, response)
            if self.directory is not None:
                transcript.save(self.directory)
        return response

    def collect(self, sessions: Iterable[str]) -> List[ModelTranscript]:
        with self.lock:
            return [self.transcripts[s] for s in sessions if s in self.transcripts]


def recording(backend: ModelBackend) -> RecordingBackend:
    """``backend`` itself when it already records, else a recording wrapper."""
    if isinstance(backend, RecordingBackend):
        return backend
    return RecordingBackend(backend)
