"""Model backends, transcripts, tools and the agent loops built on them."""

from chewspec.agents.backend import ModelBackend, ModelRequest, ModelResponse, ToolCall
from chewspec.agents.chunking import DocumentChunk, chunk_document
from chewspec.agents.http import HttpChatBackend
from chewspec.agents.isolation import IsolationResult, run_isolation
from chewspec.agents.replay import RecordingBackend, ReplayBackend
from chewspec.agents.session import AgentSession
from chewspec.agents.specagent import (
    CodeSpecResult,
    DocSpecResult,
    extract_codespec,
    extract_docspec,
    merge_specs,
)
from chewspec.agents.tools import AuditLog, Tool, ToolRegistry, replay_writes
from chewspec.agents.transcripts import (
    ModelTranscript,
    TranscriptTurn,
    load_transcripts,
)

__all__ = [
    "AgentSession",
    "AuditLog",
    "CodeSpecResult",
    "DocSpecResult",
    "DocumentChunk",
    "HttpChatBackend",
    "IsolationResult",
    "ModelBackend",
    "ModelRequest",
    "ModelResponse",
    "ModelTranscript",
    "RecordingBackend",
    "ReplayBackend",
    "Tool",
    "ToolCall",
    "ToolRegistry",
    "TranscriptTurn",
    "chunk_document",
    "extract_codespec",
    "extract_docspec",
    "load_transcripts",
    "merge_specs",
    "replay_writes",
    "run_isolation",
]
