"""Reference packet checker and test packet generation."""

from chewspec.packets.checker import CheckResult, check_packet
from chewspec.packets.corpus import TestPacket, read_corpus, write_corpus
from chewspec.packets.generator import (
    PacketGenerator,
    generate_corpus,
    generate_negative,
    generate_positive,
)
from chewspec.packets.paths import SpecPath, enumerate_paths

__all__ = [
    "CheckResult",
    "PacketGenerator",
    "SpecPath",
    "TestPacket",
    "check_packet",
    "enumerate_paths",
    "generate_corpus",
    "generate_negative",
    "generate_positive",
    "read_corpus",
    "write_corpus",
]
