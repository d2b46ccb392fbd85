"""Kernel client: lifecycles, execution, variable inspection, replay.

One kernel per (session, branch), capped at 4 live kernels per session
with least-recently-used eviction. The backend is either the in-process
stub or an external interpreter subprocess speaking newline-delimited
JSON on its standard streams; both answer the same messages, so the rest
of the system never knows which is running.

All operations on one kernel are serialized through its lock, which is
what guarantees at most one busy execution per handle and un-interleaved
stdout.
"""

from __future__ import annotations

import json
import re
import select
import shlex
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    ExecutionTimeout,
    KernelBusy,
    KernelDead,
    KernelStartFailure,
    NotTabular,
    UnknownVariable,
)
from .stubkernel import StubKernel

STARTUP_TIMEOUT_S = 10.0
INTERRUPT_GRACE_S = 5.0

STATE_STARTING = "starting"
STATE_IDLE = "idle"
STATE_BUSY = "busy"
STATE_DEAD = "dead"


@dataclass(frozen=True)
class VariableSnapshot:
    name: str
    kind: str  # scalar | sequence | dataframe | other
    type_label: str
    shape: tuple[int | None, ...] | None
    preview: object  # string, or {columns, rows} for dataframes

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "type_label": self.type_label,
            "shape": None if self.shape is None else list(self.shape),
            "preview": self.preview,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "VariableSnapshot":
        shape = d.get("shape")
        return cls(
            name=d["name"],
            kind=d["kind"],
            type_label=d["type_label"],
            shape=None if shape is None else tuple(shape),
            preview=d["preview"],
        )


@dataclass(frozen=True)
class ExecutionResult:
    status: str  # ok | error
    stdout: str
    error: dict | None  # {type, message, traceback}
    images: tuple[str, ...]  # base64 PNG
    variables: tuple[VariableSnapshot, ...]
    duration_ms: int

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "stdout": self.stdout,
            "error": self.error,
            "images": list(self.images),
            "variables": [v.to_json_dict() for v in self.variables],
            "duration_ms": self.duration_ms,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExecutionResult":
        return cls(
            status=d["status"],
            stdout=d["stdout"],
            error=d.get("error"),
            images=tuple(d.get("images", [])),
            variables=tuple(
                VariableSnapshot.from_json_dict(v) for v in d.get("variables", [])
            ),
            duration_ms=d.get("duration_ms", 0),
        )

    @classmethod
    def from_reply(cls, reply: dict) -> "ExecutionResult":
        return cls(
            status=reply["status"],
            stdout=reply.get("stdout", ""),
            error=reply.get("error"),
            images=tuple(reply.get("images", [])),
            variables=tuple(
                VariableSnapshot.from_json_dict(v) for v in reply.get("variables", [])
            ),
            duration_ms=reply.get("duration_ms", 0),
        )


@dataclass(frozen=True)
class VariablePage:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    total_matches: int
    page: int
    page_size: int

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "total_matches": self.total_matches,
            "page": self.page,
            "page_size": self.page_size,
        }


@dataclass(frozen=True)
class LoadedDataset:
    binding: str
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    path: str | None = None

    def to_message_dict(self) -> dict:
        d = {
            "binding": self.binding,
            "name": self.name,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
        }
        if self.path:
            d["path"] = self.path
        return d


def sanitize_binding(dataset_name: str) -> str:
    """Kernel variable name for a dataset: ``df_<sanitized-name>``."""
    stem = dataset_name[:-4] if dataset_name.lower().endswith(".csv") else dataset_name
    cleaned = re.sub(r"[^a-z0-9]+", "_", stem.lower()).strip("_")
    return f"df_{cleaned or 'data'}"


@dataclass(frozen=True)
class KernelConfig:
    backend: str = "stub"  # stub | sidecar
    command: str = ""  # sidecar launch command line
    timeout_s: float = 30.0
    max_kernels: int = 4

    def __post_init__(self):
        if self.backend not in ("stub", "sidecar"):
            raise ValueError(f"unknown kernel backend {self.backend!r}")
        if self.backend == "sidecar" and not self.command.strip():
            raise ValueError("sidecar backend requires a launch command")

    def to_json_dict(self) -> dict:
        return {
            "backend": self.backend,
            "command": self.command,
            "timeout_s": self.timeout_s,
            "max_kernels": self.max_kernels,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "KernelConfig":
        return cls(
            backend=d.get("backend", "stub"),
            command=d.get("command", ""),
            timeout_s=d.get("timeout_s", 30.0),
            max_kernels=d.get("max_kernels", 4),
        )


@dataclass
class KernelHandle:
    id: str
    session_id: str
    branch_id: str
    state: str = STATE_STARTING


class StubTransport:
    """In-process transport: messages go straight to a StubKernel."""

    def __init__(self):
        self._kernel = StubKernel()
        self._alive = True

    def request(self, msg: dict, timeout_s: float) -> dict:
        if not self._alive:
            raise KernelDead("stub transport closed")
        return self._kernel.handle_message(msg)

    def interrupt(self) -> None:
        pass

    def alive(self) -> bool:
        return self._alive

    def close(self) -> None:
        self._alive = False


class SidecarTransport:
    """Subprocess transport: one JSON message per line on stdin/stdout."""

    def __init__(self, command: str):
        try:
            self.proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise KernelStartFailure(f"cannot launch kernel command: {exc}") from exc
        self._rbuf = b""

    def _next_line(self, deadline: float) -> bytes | None:
        # raw fd reads with our own buffer; select on a buffered reader
        # can report not-ready while a full line sits in its buffer
        import os

        fd = self.proc.stdout.fileno()
        while True:
            nl = self._rbuf.find(b"\n")
            if nl != -1:
                line, self._rbuf = self._rbuf[:nl], self._rbuf[nl + 1 :]
                if line.strip():
                    return line
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                return None
            chunk = os.read(fd, 65536)
            if chunk == b"":
                raise KernelDead("kernel process closed its output")
            self._rbuf += chunk

    def _read_reply(self, timeout_s: float) -> dict | None:
        line = self._next_line(time.monotonic() + timeout_s)
        if line is None:
            return None
        return json.loads(line.decode("utf-8"))

    def request(self, msg: dict, timeout_s: float) -> dict:
        if not self.alive():
            raise KernelDead("kernel process has exited")
        try:
            self.proc.stdin.write((json.dumps(msg) + "\n").encode("utf-8"))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise KernelDead("kernel process has exited") from None
        reply = self._read_reply(timeout_s)
        if reply is None:
            # interrupt the running code, then drain its error result so
            # the stream stays in sync for the next request
            self.interrupt()
            self._read_reply(INTERRUPT_GRACE_S)
            if not self.alive():
                raise KernelDead("kernel died while being interrupted")
            raise ExecutionTimeout(f"no reply within {timeout_s:.0f}s; interrupted")
        return reply

    def interrupt(self) -> None:
        if self.alive():
            self.proc.send_signal(signal.SIGINT)

    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self) -> None:
        if self.alive():
            self.proc.terminate()
            try:
                self.proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


@dataclass
class _Entry:
    handle: KernelHandle
    transport: object
    lock: threading.Lock = field(default_factory=threading.Lock)
    variables: tuple[VariableSnapshot, ...] = ()
    next_msg: int = 0


class KernelManager:
    """All kernels of one process, keyed by (session, branch)."""

    def __init__(self, config: KernelConfig):
        self.config = config
        self._entries: dict[tuple[str, str], _Entry] = {}
        self._registry_lock = threading.Lock()
        self._handle_counter = 0

    # -- lifecycle ------------------------------------------------------

    def start_kernel(
        self,
        session_id: str,
        branch_id: str,
        datasets: Iterable[LoadedDataset] = (),
    ) -> KernelHandle:
        """Idempotent per (session, branch): an existing live kernel is reused."""
        key = (session_id, branch_id)
        with self._registry_lock:
            entry = self._entries.get(key)
            if entry is not None and entry.handle.state != STATE_DEAD:
                # refresh LRU position
                self._entries.pop(key)
                self._entries[key] = entry
                return entry.handle
            self._handle_counter += 1
            handle = KernelHandle(
                id=f"k{self._handle_counter}",
                session_id=session_id,
                branch_id=branch_id,
            )
            entry = _Entry(handle=handle, transport=self._open_transport())
            self._entries[key] = entry
            self._evict_over_cap(session_id)
        try:
            reply = entry.transport.request({"op": "ping"}, STARTUP_TIMEOUT_S)
            if reply.get("op") != "pong":
                raise KernelStartFailure(f"unexpected handshake reply: {reply}")
            if datasets:
                self._request(
                    entry,
                    {
                        "op": "load_datasets",
                        "datasets": [d.to_message_dict() for d in datasets],
                    },
                    STARTUP_TIMEOUT_S,
                )
        except KernelStartFailure:
            self._drop(key)
            raise
        except (KernelDead, ExecutionTimeout) as exc:
            self._drop(key)
            raise KernelStartFailure(f"kernel did not come up: {exc}") from exc
        entry.handle.state = STATE_IDLE
        return entry.handle

    def _open_transport(self):
        if self.config.backend == "stub":
            return StubTransport()
        return SidecarTransport(self.config.command)

    def _evict_over_cap(self, session_id: str) -> None:
        keys = [k for k in self._entries if k[0] == session_id]
        while len(keys) > self.config.max_kernels:
            oldest = keys.pop(0)
            entry = self._entries.pop(oldest)
            entry.handle.state = STATE_DEAD
            entry.transport.close()

    def _drop(self, key: tuple[str, str]) -> None:
        with self._registry_lock:
            entry = self._entries.pop(key, None)
        if entry is not None:
            entry.handle.state = STATE_DEAD
            entry.transport.close()

    def close_kernel(self, session_id: str, branch_id: str) -> None:
        self._drop((session_id, branch_id))

    def shutdown(self) -> None:
        with self._registry_lock:
            entries = list(self._entries.values())
            self._entries.clear()
        for entry in entries:
            entry.handle.state = STATE_DEAD
            entry.transport.close()

    def _entry(self, session_id: str, branch_id: str) -> _Entry:
        entry = self._entries.get((session_id, branch_id))
        if entry is None or entry.handle.state == STATE_DEAD:
            raise KernelDead(f"no live kernel for branch {branch_id}")
        return entry

    # -- messaging ------------------------------------------------------

    def _request(self, entry: _Entry, msg: dict, timeout_s: float) -> dict:
        entry.next_msg += 1
        msg = dict(msg, id=f"m{entry.next_msg}")
        try:
            reply = entry.transport.request(msg, timeout_s)
        except KernelDead:
            entry.handle.state = STATE_DEAD
            raise
        if reply.get("id") != msg["id"] and reply.get("op") != "pong":
            entry.handle.state = STATE_DEAD
            raise KernelDead(
                f"protocol desync: sent {msg['id']}, got {reply.get('id')}"
            )
        if reply.get("op") == "error":
            err = reply.get("error", {})
            type_name = err.get("type", "")
            message = err.get("message", "kernel error")
            if type_name == "UnknownVariable":
                raise UnknownVariable(message)
            if type_name == "NotTabular":
                raise NotTabular(message)
            raise KernelDead(f"kernel protocol error: {message}")
        if "variables" in reply:
            entry.variables = tuple(
                VariableSnapshot.from_json_dict(v) for v in reply["variables"]
            )
        return reply

    def execute(
        self, session_id: str, branch_id: str, code: str, wait: bool = True
    ) -> ExecutionResult:
        entry = self._entry(session_id, branch_id)
        if not entry.lock.acquire(blocking=wait):
            raise KernelBusy(f"kernel for branch {branch_id} is executing")
        try:
            entry.handle.state = STATE_BUSY
            started = time.monotonic()
            try:
                reply = self._request(
                    entry, {"op": "execute", "code": code}, self.config.timeout_s
                )
            finally:
                if entry.handle.state == STATE_BUSY:
                    entry.handle.state = (
                        STATE_IDLE if entry.transport.alive() else STATE_DEAD
                    )
            result = ExecutionResult.from_reply(reply)
            if result.duration_ms == 0 and self.config.backend == "sidecar":
                elapsed = int((time.monotonic() - started) * 1000)
                result = ExecutionResult(
                    result.status,
                    result.stdout,
                    result.error,
                    result.images,
                    result.variables,
                    elapsed,
                )
            return result
        finally:
            entry.lock.release()

    def list_variables(
        self, session_id: str, branch_id: str
    ) -> list[VariableSnapshot]:
        entry = self._entry(session_id, branch_id)
        return list(entry.variables)

    def fetch_variable(
        self,
        session_id: str,
        branch_id: str,
        name: str,
        filter: str | None = None,
        page: int = 0,
        page_size: int = 50,
    ) -> VariablePage:
        entry = self._entry(session_id, branch_id)
        with entry.lock:
            reply = self._request(
                entry,
                {
                    "op": "fetch_var",
                    "name": name,
                    "filter": filter or "",
                    "page": page,
                    "page_size": page_size,
                },
                self.config.timeout_s,
            )
        return VariablePage(
            name=reply["name"],
            columns=tuple(reply["columns"]),
            rows=tuple(tuple(r) for r in reply["rows"]),
            total_matches=reply["total_matches"],
            page=reply["page"],
            page_size=reply["page_size"],
        )

    def interrupt(self, session_id: str, branch_id: str) -> None:
        entry = self._entry(session_id, branch_id)
        entry.transport.interrupt()

    # -- replay ---------------------------------------------------------

    def replay_branch(
        self,
        session_id: str,
        branch_id: str,
        datasets: Iterable[LoadedDataset],
        codes: Iterable[str],
    ) -> list[ExecutionResult]:
        """Fresh kernel, then the branch's code blocks in order.

        Stops after the first error result; the returned list is truncated
        there, and the caller marks the remaining nodes unexecuted.
        """
        self.close_kernel(session_id, branch_id)
        self.start_kernel(session_id, branch_id, datasets)
        results: list[ExecutionResult] = []
        for code in codes:
            result = self.execute(session_id, branch_id, code)
            results.append(result)
            if result.status == "error":
                break
        return results
