"""
Reference BFD check: the receive-path checks of the isolated module, in Python.

Mirrors module/bfd_module.c check for check: minimum length, version,
detect_mult, then the length field against 24 and the received length.
Nothing after the mandatory section is looked at, the A bit and the M bit
included.
"""

import logging
from typing import Dict, Union

import bitstring

from chewspec.corpus import bfd_code_spec
from chewspec.packets.checker import UNDERRUN, CheckResult
from chewspec.types import Verdict

logger = logging.getLogger(__name__)

BFD_VERSION = 1
BFD_PKT_LEN = 24

HEADER_FIELDS = (
    ("vers", "uint:3"),
    ("diag", "uint:5"),
    ("flags", "uint:8"),
    ("detect_mult", "uint:8"),
    ("length", "uint:8"),
    ("my_discr", "uint:32"),
    ("your_discr", "uint:32"),
    ("desired_min_tx", "uint:32"),
    ("required_min_rx", "uint:32"),
    ("required_min_echo_rx", "uint:32"),
)
HEADER_FORMAT = ", ".join(token for _, token in HEADER_FIELDS)


Decoded = Dict[str, Union[int, bytes]]


def _reject(constraint: str, decoded: Decoded, checks, detail: str) -> CheckResult:
    failed = bfd_code_spec().find_constraint(constraint).id
    return CheckResult(
        Verdict.REJECT,
        failed_constraint=failed,
        decoded=decoded,
        checks=tuple(checks),
        detail=detail,
    )


def reference_bfd_check(data: bytes) -> CheckResult:
    """Accept or reject ``data`` the way bfd_recv_cb does."""
    data = bytes(data)
    mlen = len(data)
    checks = [("min_length", mlen >= BFD_PKT_LEN)]
    if mlen < BFD_PKT_LEN:
        return CheckResult(
            Verdict.REJECT,
            structural=UNDERRUN,
            checks=tuple(checks),
            detail=f"{mlen} bytes, need {BFD_PKT_LEN}",
        )

    stream = bitstring.ConstBitStream(bytes=data[:BFD_PKT_LEN])
    names = [name for name, _ in HEADER_FIELDS]
    decoded: Decoded = dict(zip(names, stream.unpack(HEADER_FORMAT)))
    decoded["auth_data"] = data[BFD_PKT_LEN:]

    checks.append(("version", decoded["vers"] == BFD_VERSION))
    if not checks[-1][1]:
        return _reject("vers == 1", decoded, checks, f"version {decoded['vers']}")
    checks.append(("detect_mult", decoded["detect_mult"] != 0))
    if not checks[-1][1]:
        return _reject("detect_mult != 0", decoded, checks, "detect_mult is 0")
    length = decoded["length"]
    checks.append(("length", BFD_PKT_LEN <= length <= mlen))
    if length < BFD_PKT_LEN:
        detail = f"length {length} below {BFD_PKT_LEN}"
        return _reject("length >= 24", decoded, checks, detail)
    if length > mlen:
        detail = f"length {length} above {mlen} received"
        return _reject("length <= total_len", decoded, checks, detail)

    logger.debug(f"reference check accepted {mlen} bytes")
    return CheckResult(Verdict.ACCEPT, decoded=decoded, checks=tuple(checks))
