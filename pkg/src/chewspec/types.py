from enum import Enum


class Verdict(str, Enum):
    """Outcome of checking one packet, in a spec or in a module."""

    ACCEPT = "accept"
    REJECT = "reject"
    CRASH = "crash"
    TIMEOUT = "timeout"
    PROTOCOL_ERROR = "protocol-error"

    def __str__(self) -> str:
        return self.value


class AgentRole(str, Enum):
    PROGRAM_ANALYSIS = "program-analysis"
    MODULE_ISOLATION = "module-isolation"
    SPEC = "spec"

    def __str__(self) -> str:
        return self.value
