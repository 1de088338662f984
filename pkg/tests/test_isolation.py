import shutil

import pytest

from chewspec.agents import (
    AuditLog,
    ModelResponse,
    ModelTranscript,
    ReplayBackend,
    ToolCall,
    load_transcripts,
    run_isolation,
)
from chewspec.agents.isolation import (
    ANALYSIS_SESSION,
    MODULE_SESSION,
    isolation_context,
)
from chewspec.agents.transcripts import TranscriptTurn
from chewspec.corpus import BFD
from chewspec.errors import BudgetExhaustedError, DriftError, EntryNotFoundError
from chewspec.harness import Workspace, emit_python_module
from chewspec.retrieval import index_repo

BROKEN = "def parse(:\n"


def calls(name, arguments):
    return ModelResponse(tool_calls=(ToolCall(name, arguments),))


def write(path, content):
    return calls("write_file", {"path": path, "content": content})


def backend(analysis, module):
    transcripts = {}
    for session, responses in ((ANALYSIS_SESSION, analysis), (MODULE_SESSION, module)):
        turns = [TranscriptTurn(i, None, r) for i, r in enumerate(responses)]
        transcripts[session] = ModelTranscript(session, turns)
    return ReplayBackend(transcripts)


@pytest.fixture
def workspace(tmp_path):
    ws = Workspace.create(tmp_path / "ws", profile="python")
    yield ws
    ws.cleanup()


def test_isolation_retries_after_build_failure(workspace, load_spec):
    module = emit_python_module(load_spec("tiny"))
    replay = backend(
        [
            calls("lookup_definition", {"name": "bfd_pkt"}),
            ModelResponse(text="Checks the version and the length."),
        ],
        [
            write("src/main.py", BROKEN),
            ModelResponse(text="done"),
            write("src/main.py", module),
            ModelResponse(text="fixed"),
        ],
    )
    audit = AuditLog()
    result = run_isolation(
        BFD.repo, "bfd_recv_cb", replay, budget=3, workspace=workspace, audit=audit
    )

    assert result.attempts == 2
    assert result.analysis == "Checks the version and the length."
    assert result.sources == {"src/main.py": module}
    assert result.executable.is_file()
    assert result.bundle.names[0] == "bfd_recv_cb"
    assert result.bundle.has("bfd_pkt", "type")
    assert [t.session for t in result.transcripts] == [ANALYSIS_SESSION, MODULE_SESSION]
    tools = [e["tool"] for e in audit.entries]
    assert tools == ["lookup_definition", "write_file", "write_file"]


def test_isolation_budget_exhausted(workspace):
    replay = backend(
        [ModelResponse(text="nothing")],
        [write("src/main.py", BROKEN), ModelResponse(text="done")],
    )
    with pytest.raises(BudgetExhaustedError, match="isolation budget of 1") as excinfo:
        run_isolation(BFD.repo, "bfd_recv_cb", replay, budget=1, workspace=workspace)
    assert "main.py" in excinfo.value.diagnostics


def test_isolation_rejects_bad_input(workspace):
    with pytest.raises(BudgetExhaustedError):
        empty = backend([], [])
        run_isolation(BFD.repo, "bfd_recv_cb", empty, budget=0, workspace=workspace)
    with pytest.raises(EntryNotFoundError):
        run_isolation(BFD.repo, "no_such_entry", backend([], []), workspace=workspace)


def test_bundled_transcripts_are_pinned_to_the_repo():
    transcripts = load_transcripts(BFD.transcripts)
    context = isolation_context(index_repo(BFD.repo, "c"), "bfd_recv_cb")
    assert transcripts[ANALYSIS_SESSION].context_digest == context
    assert transcripts[MODULE_SESSION].context_digest == context


def test_replay_with_edited_repo_is_drift(tmp_path, workspace):
    repo = tmp_path / "repo"
    shutil.copytree(BFD.repo, repo)
    packet_c = repo / "bfdd" / "bfd_packet.c"
    source = packet_c.read_text()
    packet_c.write_text(source.replace("bfd_check_state", "bfd_check_state_v2"))
    replay = ReplayBackend(BFD.transcripts)
    with pytest.raises(DriftError, match="session inputs changed"):
        run_isolation(repo, "bfd_recv_cb", replay, workspace=workspace)
