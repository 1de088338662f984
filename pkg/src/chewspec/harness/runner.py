"""
Running isolated modules under the harness wire protocol.

Each packet goes to the module's stdin as a 4-byte big-endian length and the
packet bytes; the module answers with one line, ``1`` (accept) or ``0``
(reject). With tracing on, the module also writes ``CHECK <id> <0|1>`` lines
to stderr, closed by a ``TRACE-END`` line. A module that dies, hangs or
answers anything else gets a crash, timeout or protocol-error verdict and is
restarted for the next packet. Output after the answer and an answer without
its newline are protocol errors of the packet that produced them.
"""

import logging
import os
import queue
import subprocess
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Deque, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from chewspec.constants import (
    DEFAULT_PACKET_TIMEOUT,
    DEFAULT_STARTUP_GRACE,
    ERROR_TEMPLATES,
    FRAME_HEADER_BYTES,
    MAX_FRAME_BYTES,
    STDOUT_CHUNK_BYTES,
    TRACE_END_MARKER,
    TRACE_ENV_VAR,
    TRACE_SETTLE_SECONDS,
)
from chewspec.errors import ExecutableMissingError
from chewspec.packets.corpus import TestPacket
from chewspec.types import Verdict

logger = logging.getLogger(__name__)

Trace = Tuple[Tuple[str, bool], ...]


@dataclass(frozen=True)
class HarnessVerdict:
    packet_id: int
    verdict: Verdict
    trace: Optional[Trace] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "packet_id": self.packet_id,
            "verdict": str(self.verdict),
            "trace": (
                None
                if self.trace is None
                else [[cid, int(ok)] for cid, ok in self.trace]
            ),
            "detail": self.detail,
        }


def encode_frame(data: bytes) -> bytes:
    if len(data) > MAX_FRAME_BYTES:
        raise ValueError(f"Packet of {len(data)} bytes exceeds the frame limit")
    return len(data).to_bytes(FRAME_HEADER_BYTES, "big") + data


def parse_trace_line(line: str) -> Optional[Tuple[str, bool]]:
    parts = line.split()
    if len(parts) == 3 and parts[0] == "CHECK" and parts[2] in ("0", "1"):
        return parts[1], parts[2] == "1"
    return None


class ModuleProcess:
    """One running module with reader threads on both output pipes.

    Stdout arrives in raw chunks so that output without a trailing newline is
    still visible in ``pending``. Stderr is queued for ``trace`` only when
    tracing; otherwise just its last lines are kept for crash reports.
    """

    def __init__(self, executable: Path, env: Mapping[str, str], tracing: bool = False):
        self.executable = executable
        self.env = dict(env)
        self.tracing = tracing
        self.proc: Optional[subprocess.Popen] = None
        self.fresh = True

    def start(self) -> None:
        self.proc = subprocess.Popen(
            [str(self.executable)],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            env=self.env,
        )
        self.fresh = True
        self.chunks: "queue.Queue[Optional[bytes]]" = queue.Queue()
        self.pending = bytearray()
        self.closed = False
        self.errors: "queue.Queue[Optional[str]]" = queue.Queue()
        self.stderr_tail: Deque[str] = deque(maxlen=20)
        sink = self.errors if self.tracing else None
        threading.Thread(
            target=self._pump_stdout, args=(self.proc, self.chunks), daemon=True
        ).start()
        threading.Thread(
            target=self._pump_stderr,
            args=(self.proc, sink, self.stderr_tail),
            daemon=True,
        ).start()
        logger.debug(f"Started module process {self.proc.pid}")

    @staticmethod
    def _pump_stdout(
        proc: subprocess.Popen, sink: "queue.Queue[Optional[bytes]]"
    ) -> None:
        for chunk in iter(lambda: proc.stdout.read1(STDOUT_CHUNK_BYTES), b""):
            sink.put(chunk)
        sink.put(None)

    @staticmethod
    def _pump_stderr(
        proc: subprocess.Popen,
        sink: "Optional[queue.Queue[Optional[str]]]",
        tail: Deque[str],
    ) -> None:
        for raw in iter(proc.stderr.readline, b""):
            line = raw.decode("utf-8", errors="replace").rstrip("\n")
            if parse_trace_line(line) is None and line != TRACE_END_MARKER:
                tail.append(line)
            if sink is not None:
                sink.put(line)
        if sink is not None:
            sink.put(None)

    def _take(self, chunk: Optional[bytes]) -> None:
        if chunk is None:
            self.closed = True
        else:
            self.pending += chunk

    def read_line(self, timeout: float) -> Optional[bytes]:
        """Next complete stdout line, or None once stdout is closed.

        Raises ``queue.Empty`` when no full line arrives within ``timeout``;
        any partial output stays in ``pending``.
        """
        deadline = time.monotonic() + timeout
        while b"\n" not in self.pending:
            if self.closed:
                return None
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise queue.Empty
            self._take(self.chunks.get(timeout=remaining))
        line, _, rest = bytes(self.pending).partition(b"\n")
        self.pending = bytearray(rest)
        return line

    def unread_output(self) -> bytes:
        """Stdout bytes that no answer has consumed, without waiting."""
        while not self.closed:
            try:
                chunk = self.chunks.get_nowait()
            except queue.Empty:
                break
            self._take(chunk)
        return bytes(self.pending)

    def drain_trace(self) -> None:
        while True:
            try:
                self.errors.get_nowait()
            except queue.Empty:
                return

    def send(self, frame: bytes, timeout: float) -> Optional[str]:
        """Write one frame; returns a failure description instead of raising."""
        failure: List[str] = []

        def write() -> None:
            try:
                self.proc.stdin.write(frame)
                self.proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError) as exc:
                failure.append(f"module stopped reading input: {exc}")

        writer = threading.Thread(target=write, daemon=True)
        writer.start()
        writer.join(timeout)
        if writer.is_alive():
            self.kill()
            return "timeout"
        return failure[0] if failure else None

    def trace(self, settle: float) -> Trace:
        found = []
        while True:
            try:
                line = self.errors.get(timeout=settle)
            except queue.Empty:
                logger.debug("Trace ended without a TRACE-END marker")
                break
            if line is None or line == TRACE_END_MARKER:
                break
            check = parse_trace_line(line)
            if check is not None:
                found.append(check)
        return tuple(found)

    def exit_detail(self) -> str:
        try:
            code = self.proc.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            code = None
        tail = " | ".join(list(self.stderr_tail)[-3:])
        return f"exit code {code}" + (f"; stderr: {tail}" if tail else "")

    def kill(self) -> None:
        if self.proc is not None and self.proc.poll() is None:
            self.proc.kill()
            try:
                self.proc.wait(timeout=1.0)
            except subprocess.TimeoutExpired:
                logger.warning(f"Module process {self.proc.pid} did not die")

    def restart(self) -> None:
        self.kill()
        self.start()

    def stop(self, timeout: float) -> None:
        if self.proc is None:
            return
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            code = self.proc.wait(timeout=timeout)
            if code != 0:
                logger.warning(f"Module exited with code {code} at end of input")
        except subprocess.TimeoutExpired:
            logger.warning("Module did not exit at end of input; killing it")
            self.kill()


class _Session:
    def __init__(
        self,
        executable: Path,
        env: Mapping[str, str],
        tracing: bool,
        timeout: float,
        startup_grace: float,
    ):
        self.module = ModuleProcess(executable, env, tracing)
        self.tracing = tracing
        self.timeout = timeout
        self.startup_grace = startup_grace

    def run(self, packets: Sequence[TestPacket]) -> List[HarnessVerdict]:
        self.module.start()
        results: List[HarnessVerdict] = []
        try:
            for packet in packets:
                if self.extra_output(results):
                    self.module.restart()
                results.append(self.one(packet))
            if results:
                time.sleep(TRACE_SETTLE_SECONDS)
                self.extra_output(results)
            return results
        finally:
            self.module.stop(self.timeout)

    def extra_output(self, results: List[HarnessVerdict]) -> bool:
        """Turn the last answer into a protocol error if more output followed it."""
        if not results or results[-1].verdict not in (Verdict.ACCEPT, Verdict.REJECT):
            return False
        extra = self.module.unread_output()
        if not extra:
            return False
        last = results[-1]
        logger.warning(f"Packet {last.packet_id}: module wrote more than one answer")
        results[-1] = HarnessVerdict(
            last.packet_id,
            Verdict.PROTOCOL_ERROR,
            last.trace,
            detail=f"output after the answer {extra[:80]!r}",
        )
        return True

    def one(self, packet: TestPacket) -> HarnessVerdict:
        module = self.module
        budget = self.timeout + (self.startup_grace if module.fresh else 0.0)
        module.fresh = False
        if self.tracing:
            module.drain_trace()
        failure = module.send(encode_frame(packet.data), budget)
        if failure == "timeout":
            module.restart()
            detail = f"input not consumed within {budget}s"
            return HarnessVerdict(packet.id, Verdict.TIMEOUT, detail=detail)
        if failure is not None:
            detail = f"{failure}; {module.exit_detail()}"
            module.restart()
            return HarnessVerdict(packet.id, Verdict.CRASH, detail=detail)
        try:
            line = module.read_line(budget)
        except queue.Empty:
            partial = bytes(module.pending)
            module.restart()
            if partial:
                return HarnessVerdict(
                    packet.id,
                    Verdict.PROTOCOL_ERROR,
                    detail=f"unterminated output {partial[:80]!r}",
                )
            return HarnessVerdict(
                packet.id, Verdict.TIMEOUT, detail=f"no verdict within {budget}s"
            )
        if line is None:
            partial = bytes(module.pending)
            detail = module.exit_detail()
            module.restart()
            if partial:
                return HarnessVerdict(
                    packet.id,
                    Verdict.PROTOCOL_ERROR,
                    detail=f"unterminated output {partial[:80]!r}; {detail}",
                )
            return HarnessVerdict(packet.id, Verdict.CRASH, detail=detail)
        answer = line.strip()
        if answer not in (b"0", b"1"):
            module.restart()
            return HarnessVerdict(
                packet.id,
                Verdict.PROTOCOL_ERROR,
                detail=f"unexpected output {line[:80]!r}",
            )
        verdict = Verdict.ACCEPT if answer == b"1" else Verdict.REJECT
        trace = module.trace(TRACE_SETTLE_SECONDS) if self.tracing else None
        logger.debug(f"Packet {packet.id}: {verdict}")
        return HarnessVerdict(packet.id, verdict, trace)


def run_module(
    executable: Union[str, Path],
    packets: Sequence[TestPacket],
    tracing: bool = False,
    timeout: float = DEFAULT_PACKET_TIMEOUT,
    startup_grace: float = DEFAULT_STARTUP_GRACE,
    env: Optional[Mapping[str, str]] = None,
    workers: int = 1,
) -> List[HarnessVerdict]:
    """One verdict per packet, in packet order."""
    executable = Path(executable)
    if not executable.is_file():
        logger.error(f"Executable missing: {executable}")
        template = ERROR_TEMPLATES["executable_missing"]
        raise ExecutableMissingError(template.format(path=executable))
    process_env = dict(os.environ)
    process_env.update(env or {})
    process_env[TRACE_ENV_VAR] = "1" if tracing else "0"
    logger.info(
        f"Running {len(packets)} packets through {executable.name} "
        f"({workers} worker(s))"
    )

    workers = max(1, min(workers, len(packets) or 1))
    shards = [list(packets[i::workers]) for i in range(workers)]

    def run_shard(shard: List[TestPacket]) -> List[HarnessVerdict]:
        session = _Session(executable, process_env, tracing, timeout, startup_grace)
        return session.run(shard)

    if workers == 1:
        results = run_shard(shards[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_shard, shards))
        results = [None] * len(packets)  # type: ignore[list-item]
        for offset, part in enumerate(parts):
            results[offset::workers] = part
    counts: Dict[str, int] = {}
    for v in results:
        counts[str(v.verdict)] = counts.get(str(v.verdict), 0) + 1
    logger.info(f"Harness verdicts: {counts}")
    return results
