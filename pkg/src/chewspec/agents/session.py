import logging
from typing import Any, Dict, List, Optional

from chewspec.agents.backend import Message, ModelBackend, ModelRequest, ToolCall
from chewspec.agents.tools import AuditLog, ToolRegistry
from chewspec.constants import ERROR_TEMPLATES, MAX_TOOL_CALLS_PER_TURN
from chewspec.errors import AgentError, BudgetExhaustedError, ToolError
from chewspec.types import AgentRole

logger = logging.getLogger(__name__)


class AgentSession:
    """One sequential conversation between an agent role and the backend.

    Each ``ask`` is one iteration and counts against ``budget``. Within an
    iteration the model may call tools for up to ``max_tool_rounds`` rounds;
    the iteration ends when it answers without tool calls.

    ``context_digest`` names the inputs the conversation was started from (a
    repository, a document); replay refuses a transcript recorded for others.
    """

    def __init__(
        self,
        session_id: str,
        role: AgentRole,
        backend: ModelBackend,
        registry: ToolRegistry,
        system_prompt: str,
        budget: int,
        audit: Optional[AuditLog] = None,
        max_tool_rounds: int = MAX_TOOL_CALLS_PER_TURN,
        context_digest: Optional[str] = None,
    ):
        self.session_id = session_id
        self.role = role
        self.backend = backend
        self.registry = registry
        self.budget = budget
        self.audit = audit if audit is not None else AuditLog()
        self.max_tool_rounds = max_tool_rounds
        self.context_digest = context_digest
        self.messages: List[Message] = [{"role": "system", "content": system_prompt}]
        self.iterations = 0
        self.turns = 0

    def ask(self, content: str) -> str:
        if self.iterations >= self.budget:
            template = ERROR_TEMPLATES["budget"]
            message = template.format(loop=self.session_id, budget=self.budget)
            raise BudgetExhaustedError(message)
        self.iterations += 1
        self.messages.append({"role": "user", "content": content})
        logger.debug(f"[{self.session_id}] iteration {self.iterations}/{self.budget}")

        for _ in range(self.max_tool_rounds + 1):
            request = ModelRequest.build(
                self.session_id,
                str(self.role),
                self.messages,
                self.registry.schemas(self.role),
                self.context_digest,
            )
            response = self.backend.complete(request)
            self.turns += 1
            calls = [
                call
                if call.call_id
                else ToolCall(call.name, call.arguments, f"call_{self.turns}_{i}")
                for i, call in enumerate(response.tool_calls)
            ]
            message = response.as_message()
            if calls:
                message["tool_calls"] = [c.to_dict() for c in calls]
            self.messages.append(message)
            if not calls:
                return response.text
            for call in calls:
                self.messages.append(
                    {
                        "role": "tool",
                        "tool_call_id": call.call_id,
                        "name": call.name,
                        "content": self._execute_tool(call),
                    }
                )
        rounds = self.max_tool_rounds
        logger.warning(f"[{self.session_id}] tool loop hit {rounds} rounds")
        raise AgentError(
            f"Session '{self.session_id}' kept calling tools for {rounds} rounds"
        )

    def _execute_tool(self, call: ToolCall) -> str:
        arguments: Dict[str, Any] = dict(call.arguments)
        try:
            result = self.registry.invoke(self.role, call.name, arguments)
            ok = True
            names = ", ".join(sorted(arguments))
            logger.info(f"🔧 [{self.session_id}] {call.name}({names})")
        except ToolError as exc:
            result = f"error: {exc}"
            ok = False
            logger.warning(f"[{self.session_id}] {result}")
        self.audit.record(self.session_id, self.role, call.name, arguments, ok, result)
        return result

