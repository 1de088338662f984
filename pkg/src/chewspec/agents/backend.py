"""
The model backend contract.

A backend receives the full request (session id, role, message history and
the schemas of the tools the role may call) and answers with text, tool
calls, or both. Everything the agents know about a model goes through here.
"""

import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from chewspec.utils import json_line, sha256_hex

Message = Dict[str, Any]


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: Dict[str, Any] = field(default_factory=dict)
    call_id: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.call_id, "name": self.name, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ToolCall":
        return cls(data["name"], dict(data.get("arguments") or {}), data.get("id", ""))


@dataclass(frozen=True)
class ModelResponse:
    text: str = ""
    tool_calls: Tuple[ToolCall, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"text": self.text, "tool_calls": [c.to_dict() for c in self.tool_calls]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelResponse":
        return cls(
            text=data.get("text") or "",
            tool_calls=tuple(
                ToolCall.from_dict(c) for c in data.get("tool_calls") or ()
            ),
        )

    def as_message(self) -> Message:
        message: Message = {"role": "assistant", "content": self.text}
        if self.tool_calls:
            message["tool_calls"] = [c.to_dict() for c in self.tool_calls]
        return message


@dataclass(frozen=True)
class ModelRequest:
    session: str
    role: str
    messages: Tuple[Message, ...]
    tools: Tuple[Dict[str, Any], ...] = ()
    context: Optional[str] = None  # digest of the session inputs, see AgentSession

    @classmethod
    def build(
        cls,
        session: str,
        role: str,
        messages: List[Message],
        tools: List[Dict[str, Any]],
        context: Optional[str] = None,
    ) -> "ModelRequest":
        return cls(
            session,
            role,
            tuple(copy.deepcopy(messages)),
            tuple(copy.deepcopy(tools)),
            context,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "session": self.session,
            "role": self.role,
            "messages": list(self.messages),
            "tools": list(self.tools),
        }
        if self.context is not None:
            data["context"] = self.context
        return data

    @property
    def digest(self) -> str:
        """Content hash of the request; replay pins every turn to it."""
        return sha256_hex(json_line(self.to_dict()))


class ModelBackend(ABC):
    """Anything that can answer a ModelRequest."""

    name = "backend"

    @abstractmethod
    def complete(self, request: ModelRequest) -> ModelResponse:
        ...
