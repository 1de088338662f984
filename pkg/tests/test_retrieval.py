import textwrap

import pytest

from chewspec.corpus import BFD
from chewspec.errors import (
    AmbiguousEntryError,
    EntryNotFoundError,
    RepoIndexError,
    SnippetParseError,
)
from chewspec.retrieval import (
    ContextBundle,
    closure_from_entry,
    expand_dependencies,
    index_repo,
    lookup_definition,
    resolve_entry,
)

PYTHON_MODULE = textwrap.dedent(
    """
    import os

    LIMIT = 10


    def helper(x):
        return x + LIMIT


    class Parser:
        def parse(self, data):
            return helper(len(data))


    def entry(data):
        return Parser().parse(data)
    """
)


@pytest.fixture(scope="module")
def bfd_index():
    return index_repo(BFD.repo, "c")


def test_index_lists_sources(bfd_index):
    assert sorted(bfd_index.files) == [
        "bfdd/bfd.c",
        "bfdd/bfd.h",
        "bfdd/bfd_packet.c",
        "lib/bfd_proto.h",
        "lib/log.h",
    ]
    assert bfd_index.definition_count > 10


def test_lookup_kinds(bfd_index):
    (pkt,) = lookup_definition(bfd_index, "bfd_pkt")
    assert pkt.kind == "type"
    assert pkt.file == "bfdd/bfd.h"
    (getver,) = lookup_definition(bfd_index, "BFD_GETVER")
    assert getver.kind == "macro"
    assert getver.text.startswith("#define BFD_GETVER")
    assert lookup_definition(bfd_index, "no_such_symbol") == []


def test_every_preprocessor_branch_is_indexed(bfd_index):
    definitions = lookup_definition(bfd_index, "BFD_SOCKET_BUFSIZE")
    assert len(definitions) == 2
    assert {d.file for d in definitions} == {"lib/bfd_proto.h"}


def test_prototypes_are_not_definitions(bfd_index):
    entry = resolve_entry(bfd_index, "bfd_recv_cb")
    assert entry.provenance == "bfdd/bfd_packet.c:66"
    assert entry.text.startswith("int bfd_recv_cb(struct thread *t)")


def test_closure_from_entry(bfd_index):
    bundle = closure_from_entry(bfd_index, "bfd_recv_cb")
    assert bundle.names[0] == "bfd_recv_cb"
    expected = (
        "bfd_pkt",
        "BFD_PKT_LEN",
        "BFD_VERSION",
        "BFD_GETVER",
        "bfd_recv_ipv4",
        "cp_debug",
        "thread",
    )
    for name in expected:
        assert bundle.has(name), name
    assert bundle.frontier == []
    assert bundle.has("bfd_check_state", "function")
    assert not bundle.has("BFD_SOCKET_BUFSIZE")


def test_closure_respects_budget(bfd_index):
    bundle = closure_from_entry(bfd_index, "bfd_recv_cb", budget=3)
    assert len(bundle.entries) == 3
    assert bundle.frontier


def test_closure_rejects_zero_budget(bfd_index):
    with pytest.raises(ValueError):
        closure_from_entry(bfd_index, "bfd_recv_cb", budget=0)


def test_missing_entry(bfd_index):
    with pytest.raises(EntryNotFoundError, match="not_here"):
        resolve_entry(bfd_index, "not_here")


def test_ambiguous_entry(tmp_path):
    (tmp_path / "a.c").write_text("int parse(void) { return 0; }\n")
    (tmp_path / "b.c").write_text("int parse(void) { return 1; }\n")
    index = index_repo(tmp_path)
    with pytest.raises(AmbiguousEntryError) as excinfo:
        resolve_entry(index, "parse")
    assert excinfo.value.candidates == ["a.c:1", "b.c:1"]


def test_empty_repo(tmp_path):
    with pytest.raises(RepoIndexError, match="No c source files"):
        index_repo(tmp_path)
    with pytest.raises(RepoIndexError, match="not a directory"):
        index_repo(tmp_path / "missing")


def test_exclusions(tmp_path):
    (tmp_path / "build").mkdir()
    (tmp_path / "build" / "gen.c").write_text("int generated(void) { return 0; }\n")
    (tmp_path / "main.c").write_text("int main(void) { return 0; }\n")
    index = index_repo(tmp_path)
    assert list(index.files) == ["main.c"]


def test_expand_dependencies_of_snippet(bfd_index):
    snippet = "int f(struct bfd_pkt *cp) { return cp->len < BFD_PKT_LEN; }"
    assert expand_dependencies(bfd_index, snippet) == ["BFD_PKT_LEN", "bfd_pkt"]


def test_expand_dependencies_rejects_broken_snippet(bfd_index):
    with pytest.raises(SnippetParseError):
        expand_dependencies(bfd_index, "int f( {")


def test_python_profile(tmp_path):
    (tmp_path / "proto.py").write_text(PYTHON_MODULE)
    index = index_repo(tmp_path, "python")
    assert lookup_definition(index, "LIMIT")[0].kind == "global"
    assert lookup_definition(index, "Parser")[0].kind == "type"
    bundle = closure_from_entry(index, "entry")
    assert bundle.names == ["entry", "Parser", "helper", "LIMIT"]
    snippet = "def g(x):\n    return helper(x) + os.sep\n"
    assert expand_dependencies(index, snippet) == ["helper", "os"]


def test_bundle_serialization(bfd_index):
    bundle = closure_from_entry(bfd_index, "bfd_recv_cb", budget=4)
    restored = ContextBundle.from_dict(bundle.to_dict())
    assert restored == bundle
    assert "--- function bfd_recv_cb @ bfdd/bfd_packet.c:66" in bundle.to_prompt()
