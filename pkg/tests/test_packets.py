import json

import pytest

from chewspec.errors import GenerationError
from chewspec.packets import (
    PacketGenerator,
    TestPacket,
    check_packet,
    enumerate_paths,
    generate_corpus,
    generate_negative,
    generate_positive,
    read_corpus,
    write_corpus,
)
from chewspec.packets.checker import NO_ARM, OVERRUN, UNDERRUN
from chewspec.packets.codec import BitReader, BitWriter, set_bits
from chewspec.pfs import parse_spec
from chewspec.pfs.evaluator import evaluate_constraint
from chewspec.types import Verdict

BFD_EXAMPLE = bytes.fromhex(
    "20c00118" "00000001" "00000000" "00000064" "00000064" "00000000"
)
GENERATED_FIXTURES = [
    "tiny",
    "pair",
    "ordered",
    "optional",
    "tagged",
    "sized",
    "trailing",
    "nested",
    "counted",
    "window",
]
ALL_FIXTURES = GENERATED_FIXTURES + ["bfd_code", "bfd_doc"]


def with_byte(data, index, value):
    out = bytearray(data)
    out[index] = value
    return bytes(out)


def test_example_packet_is_accepted(bfd_code, bfd_doc):
    assert len(BFD_EXAMPLE) == 24
    result = check_packet(bfd_code, BFD_EXAMPLE)
    assert result.verdict == Verdict.ACCEPT
    assert result.decoded["vers"] == 1
    assert result.decoded["detect_mult"] == 1
    assert result.decoded["length"] == 24
    assert result.decoded["desired_min_tx"] == 100
    assert result.decoded["auth_data"] == b""
    assert check_packet(bfd_doc, BFD_EXAMPLE).accepted


def test_zero_detect_mult_only_rejected_by_code_spec(bfd_code, bfd_doc):
    data = with_byte(BFD_EXAMPLE, 2, 0)
    result = check_packet(bfd_code, data)
    assert result.verdict == Verdict.REJECT
    assert result.failed_constraint == bfd_code.find_constraint("detect_mult != 0").id
    assert check_packet(bfd_doc, data).accepted


def test_wrong_version_fails_first_check(bfd_code):
    result = check_packet(bfd_code, with_byte(BFD_EXAMPLE, 0, 0x40))
    vers = bfd_code.find_constraint("vers == 1").id
    assert result.failed_constraint == vers
    assert result.checks == ((vers, False),)


def test_length_above_received(bfd_code):
    result = check_packet(bfd_code, with_byte(BFD_EXAMPLE, 3, 25))
    expected = bfd_code.find_constraint("length <= total_len")
    assert result.failed_constraint == expected.id


def test_short_packet_is_structural_reject(bfd_code):
    result = check_packet(bfd_code, BFD_EXAMPLE[:23])
    assert result.verdict == Verdict.REJECT
    assert result.structural == UNDERRUN
    assert result.failed_constraint is None
    assert check_packet(bfd_code, b"").structural == UNDERRUN


def test_structural_failure_wins_over_earlier_constraints(bfd_code, load_spec):
    # vers is wrong and the packet is short: the short packet is what gets reported
    result = check_packet(bfd_code, with_byte(BFD_EXAMPLE, 0, 0x40)[:20])
    assert result.structural == UNDERRUN
    assert result.failed_constraint is None
    assert result.checks == ()

    sized = load_spec("sized")
    assert check_packet(sized, bytes([9, 1])).structural == UNDERRUN
    # trailing bytes are structural too
    spec = parse_spec("format t { a: u8 where a == 1; }")
    assert check_packet(spec, bytes([2, 0])).structural == OVERRUN
    expected = spec.find_constraint("a == 1")
    assert check_packet(spec, bytes([2])).failed_constraint == expected.id


def test_constraints_fail_in_declaration_order(bfd_code):
    data = with_byte(with_byte(BFD_EXAMPLE, 0, 0x40), 2, 0)
    result = check_packet(bfd_code, data)
    vers = bfd_code.find_constraint("vers == 1").id
    assert result.failed_constraint == vers
    assert [cid for cid, _ in result.checks] == [vers]


def test_code_spec_takes_trailing_bytes_as_auth_data(bfd_code, bfd_doc):
    data = BFD_EXAMPLE + b"\x01\x02\x03\x04"
    result = check_packet(bfd_code, data)
    assert result.accepted
    assert result.decoded["auth_data"] == b"\x01\x02\x03\x04"
    assert check_packet(bfd_doc, data).structural == OVERRUN


@pytest.mark.parametrize(
    "data,verdict,path",
    [
        (bytes([0x80, 0xFF]), Verdict.ACCEPT, ("tag=default",)),
        (bytes([0x80, 0x00]), Verdict.REJECT, ("tag=default",)),
        (bytes([0x40, 0x05]), Verdict.ACCEPT, ("tag=1",)),
        (bytes([0x40, 0x00]), Verdict.REJECT, ("tag=1",)),
        (bytes([0x00, 0x00]), Verdict.ACCEPT, ("tag=0",)),
    ],
)
def test_variant_selection(load_spec, data, verdict, path):
    result = check_packet(load_spec("tagged"), data)
    assert result.verdict == verdict
    assert result.path == path


def test_no_arm_without_default(load_spec):
    # kind 3 has no arm and nested has no default
    result = check_packet(load_spec("nested"), bytes([0x30, 0x00]))
    assert result.structural == NO_ARM


def test_conditional_body(load_spec):
    spec = load_spec("optional")
    assert check_packet(spec, bytes([0x00])).accepted
    present = check_packet(spec, bytes([0x80, 0x07]))
    assert present.accepted
    assert present.path == ("if(present == 1)",)
    assert check_packet(spec, bytes([0x80])).structural == UNDERRUN
    assert not check_packet(spec, bytes([0x80, 0x00])).accepted


def test_byte_arrays(load_spec):
    sized = load_spec("sized")
    assert check_packet(sized, bytes([2, 0xAA, 0xBB])).decoded["payload"] == b"\xaa\xbb"
    assert check_packet(sized, bytes([5, 1, 2, 3, 4, 5])).failed_constraint is not None
    assert check_packet(sized, bytes([3, 1])).structural == UNDERRUN

    trailing = load_spec("trailing")
    assert check_packet(trailing, bytes([2])).decoded["body"] == b""
    decoded = check_packet(trailing, bytes([2, 1, 2, 3])).decoded
    assert decoded["body"] == b"\x01\x02\x03"


def test_global_constraint(load_spec):
    spec = load_spec("ordered")
    assert check_packet(spec, bytes([0x12])).accepted
    result = check_packet(spec, bytes([0x21]))
    assert result.failed_constraint == spec.find_constraint("a <= b").id


def test_enumerate_paths(bfd_doc, load_spec):
    paths = enumerate_paths(bfd_doc)
    assert len(paths) == 6
    assert paths[0].label == "<root>"
    assert paths[1].label == "if(a == 1) / auth_type=1"
    assert paths[1].has_field("password")
    assert [p.label for p in enumerate_paths(load_spec("nested"))] == [
        "kind=1",
        "kind=1 / if(flags == 15)",
        "kind=2",
    ]
    assert len(enumerate_paths(bfd_doc, limit=2)) == 2


@pytest.mark.parametrize("name", GENERATED_FIXTURES)
def test_positives_are_accepted(load_spec, name):
    spec = load_spec(name)
    packets = generate_positive(spec, seed=7, n=10)
    assert [p.id for p in packets] == list(range(10))
    for packet in packets:
        assert packet.is_positive
        assert check_packet(spec, packet.data).accepted


def test_positives_are_deterministic(bfd_doc):
    first = [p.data for p in generate_positive(bfd_doc, seed=42, n=12)]
    second = [p.data for p in generate_positive(bfd_doc, seed=42, n=12)]
    assert first == second


def test_positives_cover_every_arm(load_spec):
    packets = generate_positive(load_spec("tagged"), seed=1, n=6)
    assert {p.path for p in packets} == {"tag=0", "tag=1", "tag=default"}


def test_positive_count_must_be_positive(load_spec):
    with pytest.raises(ValueError):
        generate_positive(load_spec("tiny"), n=0)


def test_unsatisfiable_spec():
    spec = parse_spec("format impossible { a: u8 where a > 10, a < 5; }")
    with pytest.raises(GenerationError, match="impossible"):
        generate_positive(spec, n=1)


def test_negatives_fail_their_target(bfd_code):
    generator = PacketGenerator(bfd_code, 5)
    negatives = generate_negative(bfd_code, generator=generator)
    assert negatives
    targeted = set()
    for packet in negatives:
        result = check_packet(bfd_code, packet.data)
        assert result.verdict == Verdict.REJECT
        if packet.target_constraint:
            assert result.failed_constraint == packet.target_constraint
            targeted.add(packet.target_constraint)
        else:
            assert packet.mutation in ("truncate", "extend", "length-corrupt")
    assert bfd_code.find_constraint("vers == 1").id in targeted
    assert bfd_code.find_constraint("detect_mult != 0").id in targeted


def constraints_on_path(spec, result):
    taken = set(result.path)
    for path, _, constraint in spec.iter_constraints():
        if all(label in taken for label in path):
            yield constraint


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_negatives_violate_only_their_target(fixture_spec, name):
    spec = fixture_spec(name)
    negatives = generate_negative(spec, seed=13, n=3 * len(spec.constraint_ids()) + 3)
    for packet in negatives:
        if not packet.target_constraint:
            continue
        result = check_packet(spec, packet.data)
        ints = {k: v for k, v in result.decoded.items() if isinstance(v, int)}
        for constraint in constraints_on_path(spec, result):
            holds = evaluate_constraint(constraint, ints, len(packet.data))
            context = (name, packet, constraint.text)
            assert holds == (constraint.id != packet.target_constraint), context


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_generator_soundness(fixture_spec, name):
    spec = fixture_spec(name)
    generator = PacketGenerator(spec, 21)
    for index in range(256):
        packet = generator.positive(index)
        assert check_packet(spec, packet.data).accepted, (name, index)
    negatives = generate_negative(spec, generator=generator)
    for packet in negatives:
        result = check_packet(spec, packet.data)
        assert result.verdict == Verdict.REJECT, (name, packet)
        if packet.target_constraint:
            assert result.failed_constraint == packet.target_constraint, (name, packet)
    targeted = {p.target_constraint for p in negatives if p.target_constraint}
    assert targeted | set(generator.skipped) >= set(spec.constraint_ids())


def test_target_that_cannot_fail_alone_is_skipped():
    spec = parse_spec("format p { a: u8 where a != 0; b: u8 where a >= 1; }")
    generator = PacketGenerator(spec, 0)
    negatives = generate_negative(spec, generator=generator)
    assert spec.find_constraint("a != 0").id in generator.skipped
    assert spec.find_constraint("a >= 1").id in generator.skipped
    assert all(p.target_constraint is None for p in negatives)
    assert all(not check_packet(spec, p.data).accepted for p in negatives)


def test_mutations_that_keep_the_verdict_are_skipped(load_spec):
    spec = load_spec("tiny")
    generator = PacketGenerator(spec, 0)
    negatives = generate_negative(spec, generator=generator)
    assert "length-corrupt" in generator.skipped
    assert {p.mutation for p in negatives if p.mutation} == {"truncate", "extend"}


def test_generate_corpus(bfd_code):
    packets = generate_corpus(bfd_code, seed=3, positives=8, negatives_per_constraint=1)
    assert [p.id for p in packets] == list(range(len(packets)))
    assert all(p.is_positive for p in packets[:8])
    assert all(not p.is_positive for p in packets[8:])
    assert len(packets) > 8


def test_corpus_file(tmp_path, load_spec):
    spec = load_spec("pair")
    packets = generate_corpus(spec, seed=9, positives=4)
    path = write_corpus(tmp_path / "out" / "pair.jsonl", packets)
    assert read_corpus(path) == packets
    first = json.loads(path.read_text().splitlines()[0])
    assert first["schema_version"] == 1
    assert first["expectation"] == "accept"
    assert first["bytes"] == packets[0].data.hex()


def test_corpus_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": 0, "bytes": "00", "expectation": "accept"}\n{"id": 1}\n')
    with pytest.raises(ValueError, match=":2:"):
        read_corpus(path)


def test_negative_packet_needs_a_reason():
    with pytest.raises(ValueError, match="target constraint or a mutation"):
        TestPacket(0, b"\x00", Verdict.REJECT)


def test_bit_codec():
    writer = BitWriter()
    writer.write_uint(1, 3)
    writer.write_uint(0, 5)
    writer.write_bytes(b"\xff")
    assert writer.to_bytes() == b"\x20\xff"

    reader = BitReader(b"\x20\xff")
    assert reader.read_uint(3) == 1
    assert reader.read_uint(5) == 0
    assert reader.aligned
    assert reader.read_bytes(1) == b"\xff"
    assert reader.read_uint(1) is None

    assert set_bits(b"\x00\x00", 0, 3, 1) == b"\x20\x00"
    partial = BitWriter()
    partial.write_uint(1, 3)
    with pytest.raises(ValueError):
        partial.to_bytes()


def test_bit_codec_crosses_byte_boundaries():
    reader = BitReader(b"\x0f\xf0")
    assert reader.read_uint(4) == 0
    assert reader.read_uint(8) == 0xFF
    assert not reader.aligned
    assert reader.pos == 12
    assert reader.remaining == 4
    assert reader.read_bytes(1) is None
    assert reader.read_bytes(0) == b""

    # values wider than the field keep their low bits
    assert set_bits(b"\x00\x00", 4, 8, 0x1FF) == b"\x0f\xf0"
    writer = BitWriter()
    writer.write_uint(0x1F, 4)
    writer.write_uint(0, 4)
    writer.write_bytes(b"")
    assert writer.bits == 8
    assert writer.to_bytes() == b"\xf0"
