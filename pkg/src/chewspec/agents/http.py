"""Live backend: a chat-completions endpoint spoken over JSON/HTTP."""

import json
import logging
import os
from typing import Any, Dict, List, Optional

import requests

from chewspec.agents.backend import (
    Message,
    ModelBackend,
    ModelRequest,
    ModelResponse,
    ToolCall,
)
from chewspec.constants import DEFAULT_API_KEY_ENV
from chewspec.errors import BackendError

logger = logging.getLogger(__name__)

TEMPERATURE = 0


def _wire_message(message: Message) -> Dict[str, Any]:
    wire: Dict[str, Any] = {
        "role": message["role"],
        "content": message.get("content") or "",
    }
    if message.get("tool_calls"):
        wire["tool_calls"] = [
            {
                "id": call["id"],
                "type": "function",
                "function": {
                    "name": call["name"],
                    "arguments": json.dumps(call["arguments"], sort_keys=True),
                },
            }
            for call in message["tool_calls"]
        ]
    if message["role"] == "tool":
        wire["tool_call_id"] = message["tool_call_id"]
    return wire


def _parse_choice(data: Dict[str, Any]) -> ModelResponse:
    try:
        message = data["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"Response has no message: {str(data)[:200]}") from exc
    calls: List[ToolCall] = []
    for raw in message.get("tool_calls") or ():
        function = raw.get("function") or {}
        arguments = function.get("arguments") or "{}"
        try:
            if isinstance(arguments, str):
                parsed = json.loads(arguments)
            else:
                parsed = dict(arguments)
        except json.JSONDecodeError as exc:
            raise BackendError(
                f"Tool call '{function.get('name')}' has malformed arguments: {exc}"
            ) from exc
        calls.append(ToolCall(function.get("name", ""), parsed, raw.get("id", "")))
    return ModelResponse(text=message.get("content") or "", tool_calls=tuple(calls))


class HttpChatBackend(ModelBackend):
    """POSTs the conversation to ``endpoint`` with temperature 0."""

    name = "http"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 120.0,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.http = session or requests.Session()
        api_key = os.environ.get(api_key_env)
        if api_key:
            self.http.headers["Authorization"] = f"Bearer {api_key}"
        else:
            logger.warning(
                f"{api_key_env} is not set; calling {endpoint} without credentials"
            )

    def payload(self, request: ModelRequest) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            "model": self.model,
            "temperature": TEMPERATURE,
            "messages": [_wire_message(m) for m in request.messages],
        }
        if request.tools:
            body["tools"] = [{"type": "function", "function": t} for t in request.tools]
        return body

    def complete(self, request: ModelRequest) -> ModelResponse:
        logger.debug(
            f"POST {self.endpoint} for session '{request.session}' "
            f"({len(request.messages)} messages)"
        )
        try:
            response = self.http.post(
                self.endpoint, json=self.payload(request), timeout=self.timeout
            )
            response.raise_for_status()
            data = response.json()
        except requests.exceptions.Timeout as exc:
            message = f"Model endpoint timed out after {self.timeout}s"
            raise BackendError(message) from exc
        except requests.exceptions.RequestException as exc:
            raise BackendError(f"Model endpoint request failed: {exc}") from exc
        except ValueError as exc:
            raise BackendError(f"Model endpoint returned invalid JSON: {exc}") from exc
        return _parse_choice(data)
