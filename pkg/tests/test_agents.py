import json
from unittest.mock import Mock

import pytest
import requests

from chewspec.agents import (
    AgentSession,
    AuditLog,
    HttpChatBackend,
    ModelBackend,
    ModelRequest,
    ModelResponse,
    ModelTranscript,
    RecordingBackend,
    ReplayBackend,
    Tool,
    ToolCall,
    ToolRegistry,
    load_transcripts,
    replay_writes,
)
from chewspec.agents.prompts import prompt_names, render_prompt
from chewspec.agents.tools import spec_tools, workspace_tools
from chewspec.agents.transcripts import TranscriptTurn
from chewspec.errors import (
    AgentError,
    BackendError,
    BudgetExhaustedError,
    ConfigError,
    DriftError,
    ToolError,
)
from chewspec.harness import Workspace
from chewspec.types import AgentRole
from tests.conftest import spec_text


def scripted(session, *responses):
    """Replay backend serving unpinned ``responses`` to one session."""
    turns = [TranscriptTurn(i, None, r) for i, r in enumerate(responses)]
    return ReplayBackend({session: ModelTranscript(session, turns)})


def spec_session(backend, session="s", budget=3, audit=None, **kwargs):
    registry = ToolRegistry(spec_tools())
    return AgentSession(
        session, AgentRole.SPEC, backend, registry, "system", budget, audit, **kwargs
    )


def calls(name, arguments, call_id=""):
    """A reply that makes one tool call."""
    return ModelResponse(tool_calls=(ToolCall(name, arguments, call_id),))


class EchoBackend(ModelBackend):
    """Answers every request with the last user message."""

    name = "echo"

    def complete(self, request):
        return ModelResponse(text=request.messages[-1]["content"].upper())


def test_replay_serves_recorded_turns():
    backend = scripted("s", ModelResponse(text="first"), ModelResponse(text="second"))
    session = spec_session(backend)
    assert session.ask("one") == "first"
    assert session.ask("two") == "second"
    assert backend.unused() == []


def test_truncated_transcript_is_drift():
    session = spec_session(scripted("s", ModelResponse(text="only")))
    session.ask("one")
    with pytest.raises(DriftError, match="transcript ends after 1 turns"):
        session.ask("two")


def test_unknown_session_is_drift():
    session = spec_session(scripted("other", ModelResponse(text="x")))
    with pytest.raises(DriftError, match="no recorded transcript"):
        session.ask("hello")


def test_strict_replay_rejects_unpinned_turns():
    backend = scripted("s", ModelResponse(text="x"))
    backend.strict = True
    with pytest.raises(DriftError, match="not pinned"):
        spec_session(backend).ask("hello")


def test_recorded_turns_are_pinned(tmp_path):
    recorder = RecordingBackend(EchoBackend(), tmp_path)
    assert spec_session(recorder).ask("hello") == "HELLO"
    (transcript,) = recorder.collect(["s"])
    assert transcript.pinned

    replay = ReplayBackend(tmp_path, strict=True)
    assert spec_session(replay).ask("hello") == "HELLO"

    drifting = ReplayBackend(tmp_path, strict=True)
    with pytest.raises(DriftError, match="does not match"):
        spec_session(drifting).ask("goodbye")


def test_recording_pins_session_context(tmp_path):
    recorder = RecordingBackend(EchoBackend(), tmp_path)
    spec_session(recorder, context_digest="ctx-a").ask("hello")
    assert load_transcripts(tmp_path)["s"].context_digest == "ctx-a"

    replay = spec_session(ReplayBackend(tmp_path), context_digest="ctx-a")
    assert replay.ask("hello") == "HELLO"
    with pytest.raises(DriftError, match="session inputs changed"):
        spec_session(ReplayBackend(tmp_path), context_digest="ctx-b").ask("hello")
    with pytest.raises(DriftError, match="session inputs changed"):
        spec_session(ReplayBackend(tmp_path)).ask("hello")

    (tmp_path / "mixed.jsonl").write_text(
        '{"context_digest": "x", "turn": 0, "request_digest": null, "response": {}}\n'
        '{"context_digest": "y", "turn": 1, "request_digest": null, "response": {}}\n'
    )
    with pytest.raises(ConfigError, match="disagree on context_digest"):
        load_transcripts(tmp_path)


def test_budget_is_enforced():
    session = spec_session(scripted("s", ModelResponse(text="x")), budget=0)
    with pytest.raises(BudgetExhaustedError, match="budget of 0"):
        session.ask("hello")


def test_tool_calls_are_executed_and_audited():
    source = spec_text("tiny")
    backend = scripted(
        "s",
        calls("check_spec", {"source": source}),
        calls("check_packet", {"source": source, "packet_hex": "00"}),
        ModelResponse(text="done"),
    )
    audit = AuditLog()
    session = spec_session(backend, audit=audit)
    assert session.ask("check it") == "done"
    assert [e["tool"] for e in audit.entries] == ["check_spec", "check_packet"]
    assert audit.entries[0]["result"] == "ok: format 'tiny' with 2 fields"
    assert audit.entries[1]["result"].startswith("reject: c_")
    tool_messages = [m for m in session.messages if m["role"] == "tool"]
    assert tool_messages[0]["tool_call_id"] == "call_1_0"


def test_tool_errors_go_back_to_the_model():
    backend = scripted(
        "s",
        calls("write_file", {"path": "x", "content": "y"}),
        calls("check_spec", {"text": "x"}),
        ModelResponse(text="ok"),
    )
    audit = AuditLog()
    spec_session(backend, audit=audit).ask("go")
    assert [e["ok"] for e in audit.entries] == [False, False]
    assert "not registered for role 'spec'" in audit.entries[0]["result"]
    assert "missing ['source']" in audit.entries[1]["result"]


def test_tool_loop_is_bounded():
    call = calls("check_spec", {"source": "format x { a: u8; }"})
    session = spec_session(scripted("s", call, call, call), max_tool_rounds=1)
    with pytest.raises(AgentError, match="kept calling tools"):
        session.ask("go")


def test_registry_rules():
    registry = ToolRegistry(spec_tools())
    with pytest.raises(ValueError, match="registered twice"):
        registry.register(spec_tools()[0])
    names = [s["name"] for s in registry.schemas(AgentRole.SPEC)]
    assert names == ["check_packet", "check_spec", "generate_packets"]
    assert registry.schemas(AgentRole.PROGRAM_ANALYSIS) == []
    with pytest.raises(ToolError):
        arguments = {"source": "format x {", "packet_hex": "00"}
        registry.invoke(AgentRole.SPEC, "check_packet", arguments)

    tool = Tool(
        "noop",
        "Does nothing.",
        {"type": "object", "properties": {}},
        lambda: "",
        frozenset({AgentRole.SPEC}),
    )
    registry.register(tool)
    assert registry.invoke(AgentRole.SPEC, "noop", {}) == ""


def test_generate_packets_tool():
    registry = ToolRegistry(spec_tools())
    arguments = {"source": spec_text("tiny"), "count": 3}
    output = registry.invoke(AgentRole.SPEC, "generate_packets", arguments)
    lines = output.splitlines()
    assert len(lines) == 3
    assert all(int(line, 16) >= 0x80 for line in lines)


def test_audit_log_rebuilds_workspace(tmp_path):
    ws = Workspace.create(tmp_path / "ws", profile="python")
    registry = ToolRegistry(workspace_tools(ws))
    backend = scripted(
        "iso",
        calls("write_file", {"path": "src/main.py", "content": "print('hi')\n"}),
        calls("write_file", {"path": "../escape.py", "content": "x"}),
        calls("list_files", {}),
        ModelResponse(text="done"),
    )
    audit = AuditLog(tmp_path / "audit.jsonl")
    session = AgentSession(
        "iso", AgentRole.MODULE_ISOLATION, backend, registry, "system", 1, audit
    )
    session.ask("write it")
    assert len(audit.writes()) == 1
    assert audit.entries[-1]["result"] == "src/main.py"

    lines = (tmp_path / "audit.jsonl").read_text().splitlines()
    assert [json.loads(line)["seq"] for line in lines] == [0, 1, 2]
    rebuilt = replay_writes(tmp_path / "audit.jsonl", tmp_path / "rebuilt")
    assert [p.read_text() for p in rebuilt] == ["print('hi')\n"]
    ws.cleanup()


def test_transcript_files(tmp_path):
    transcript = ModelTranscript("docspec-00")
    transcript.append("abc", ModelResponse(text="NONE"))
    transcript.append(None, calls("check_spec", {"source": "x"}, "c1"))
    transcript.save(tmp_path)
    loaded = load_transcripts(tmp_path)["docspec-00"]
    assert loaded == transcript
    assert not loaded.pinned

    (tmp_path / "broken.jsonl").write_text('{"turn": 1, "response": {}}\n')
    with pytest.raises(ConfigError, match="out of order"):
        load_transcripts(tmp_path)
    (tmp_path / "broken.jsonl").write_text("not json\n")
    with pytest.raises(ConfigError, match="Invalid transcript"):
        load_transcripts(tmp_path)
    with pytest.raises(ConfigError, match="not found"):
        load_transcripts(tmp_path / "absent")


def test_request_digest_covers_tools():
    messages = [{"role": "user", "content": "x"}]
    plain = ModelRequest.build("s", "spec", messages, [])
    with_tools = ModelRequest.build("s", "spec", messages, [{"name": "t"}])
    assert plain.digest != with_tools.digest
    assert plain.digest == ModelRequest.build("s", "spec", messages, []).digest


def test_prompts_render():
    expected = {"codespec", "docspec_chunk", "isolation", "refine_syntax"}
    assert expected <= set(prompt_names())
    text = render_prompt(
        "docspec_chunk", name="bfd_doc", heading="4.1. Format", text="body"
    )
    assert "Format name: bfd_doc" in text
    assert not text.startswith("<!--")
    with pytest.raises(KeyError):
        render_prompt("docspec_chunk", name="x")


def http_backend(monkeypatch, payload=None, error=None):
    monkeypatch.setenv("CHEWSPEC_API_KEY", "sk-test")
    session = Mock()
    session.headers = {}
    if error is not None:
        session.post.side_effect = error
    else:
        session.post.return_value.json.return_value = payload
    backend = HttpChatBackend(
        "https://llm.example/v1/chat/completions", "model-x", session=session
    )
    return backend, session


def test_http_backend_round_trip(monkeypatch):
    payload = {
        "choices": [
            {
                "message": {
                    "content": None,
                    "tool_calls": [
                        {
                            "id": "c1",
                            "function": {
                                "name": "check_spec",
                                "arguments": '{"source": "format x { a: u8; }"}',
                            },
                        }
                    ],
                }
            }
        ]
    }
    backend, session = http_backend(monkeypatch, payload)
    request = ModelRequest.build(
        "s",
        "spec",
        [
            {"role": "user", "content": "hi"},
            {"role": "tool", "tool_call_id": "c0", "name": "t", "content": "r"},
        ],
        [{"name": "check_spec"}],
    )
    response = backend.complete(request)
    expected = ToolCall("check_spec", {"source": "format x { a: u8; }"}, "c1")
    assert response.tool_calls == (expected,)
    assert session.headers["Authorization"] == "Bearer sk-test"
    body = session.post.call_args.kwargs["json"]
    assert body["temperature"] == 0
    assert body["model"] == "model-x"
    assert body["messages"][1]["tool_call_id"] == "c0"
    assert body["tools"] == [{"type": "function", "function": {"name": "check_spec"}}]


def test_http_backend_failures(monkeypatch):
    request = ModelRequest.build("s", "spec", [{"role": "user", "content": "hi"}], [])
    backend, _ = http_backend(monkeypatch, error=requests.exceptions.Timeout())
    with pytest.raises(BackendError, match="timed out"):
        backend.complete(request)

    backend, _ = http_backend(monkeypatch, {"choices": []})
    with pytest.raises(BackendError, match="no message"):
        backend.complete(request)

    bad_call = {"id": "c", "function": {"name": "t", "arguments": "{"}}
    bad_args = {"choices": [{"message": {"tool_calls": [bad_call]}}]}
    backend, _ = http_backend(monkeypatch, bad_args)
    with pytest.raises(BackendError, match="malformed arguments"):
        backend.complete(request)
