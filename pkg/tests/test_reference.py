import pytest

from chewspec.corpus.reference import reference_bfd_check
from chewspec.packets import check_packet, generate_corpus
from chewspec.packets.checker import UNDERRUN
from chewspec.types import Verdict
from tests.test_packets import BFD_EXAMPLE


def test_example_packet():
    result = reference_bfd_check(BFD_EXAMPLE)
    assert result.accepted
    assert result.decoded["detect_mult"] == 1
    assert result.decoded["auth_data"] == b""
    names = [name for name, _ in result.checks]
    assert names == ["min_length", "version", "detect_mult", "length"]


def test_short_packet_is_an_underrun():
    result = reference_bfd_check(BFD_EXAMPLE[:23])
    assert result.verdict == Verdict.REJECT
    assert result.structural == UNDERRUN
    assert result.failed_constraint is None


@pytest.mark.parametrize(
    "index, value, constraint",
    [
        (0, 0x40, "vers == 1"),
        (2, 0x00, "detect_mult != 0"),
        (3, 0x17, "length >= 24"),
        (3, 0x19, "length <= total_len"),
    ],
)
def test_each_check_names_its_constraint(bfd_code, index, value, constraint):
    data = bytearray(BFD_EXAMPLE)
    data[index] = value
    result = reference_bfd_check(bytes(data))
    assert result.failed_constraint == bfd_code.find_constraint(constraint).id


def test_trailing_authentication_bytes_are_ignored():
    data = BFD_EXAMPLE + b"\x01\x02\x03"
    result = reference_bfd_check(data)
    assert result.accepted
    assert result.decoded["auth_data"] == b"\x01\x02\x03"


def test_agrees_with_code_spec_on_generated_corpus(bfd_code):
    corpus = generate_corpus(bfd_code, seed=7, positives=16, negatives_per_constraint=3)
    for packet in corpus:
        expected = check_packet(bfd_code, packet.data)
        actual = reference_bfd_check(packet.data)
        assert actual.verdict == expected.verdict, packet
        if len(packet.data) >= 24:
            assert actual.failed_constraint == expected.failed_constraint, packet
        if actual.accepted:
            assert actual.decoded == expected.decoded
