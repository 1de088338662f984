import pytest

from chewspec.harness.codegen import emit_python_module, python_expr
from chewspec.packets import check_packet, generate_corpus
from chewspec.pfs import parse_spec
from chewspec.pfs.canonical import spec_digest
from tests.test_packets import GENERATED_FIXTURES


def load_module(spec):
    namespace = {"__name__": "generated"}
    exec(compile(emit_python_module(spec), f"{spec.name}_module.py", "exec"), namespace)
    return namespace


def run_parse(module, data):
    trace = []
    try:
        module["parse"](data, trace)
        return True, trace
    except module["Reject"]:
        return False, trace


def test_expressions_render_as_python():
    source = "format e { a: u8; b: u8; where not (a + 1 < b) and total_len >= 2; }"
    (constraint,) = parse_spec(source).constraints
    expected = "((not ((env['a'] + 1) < env['b'])) and (total >= 2))"
    assert python_expr(constraint.expr) == expected


def test_header_names_spec(load_spec):
    spec = load_spec("tiny")
    source = emit_python_module(spec)
    assert f"format 'tiny' (spec digest {spec_digest(spec)[:16]})" in source
    assert source.startswith("#!/usr/bin/env python3")


@pytest.mark.parametrize("name", GENERATED_FIXTURES)
def test_generated_parser_matches_checker(load_spec, name):
    spec = load_spec(name)
    module = load_module(spec)
    corpus = generate_corpus(spec, seed=11, positives=8, negatives_per_constraint=2)
    for packet in corpus:
        accepted, trace = run_parse(module, packet.data)
        expected = check_packet(spec, packet.data)
        assert accepted == expected.accepted, (name, packet)
        assert trace == list(expected.checks), (name, packet)
        if expected.failed_constraint:
            assert trace[-1] == (expected.failed_constraint, False)


def test_switch_without_default_rejects_unknown_tags():
    spec = parse_spec("format s { t: u8; switch t { 1 => { x: u8; } } }")
    module = load_module(spec)
    assert run_parse(module, b"\x01\x07")[0]
    assert not run_parse(module, b"\x02\x07")[0]
    assert not run_parse(module, b"\x01\x07\x00")[0]


def test_structure_is_decoded_before_constraints_are_checked(bfd_code):
    module = load_module(bfd_code)
    header = bytes.fromhex("20c00118" + "00" * 20)
    accepted, trace = run_parse(module, header[:23])
    assert not accepted
    assert trace == []
    assert check_packet(bfd_code, header[:23]).checks == ()
