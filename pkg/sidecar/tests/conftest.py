"""Wire-level harness: run the sidecar as the subprocess it ships as."""

from __future__ import annotations

import json
import os
import select
import signal
import subprocess
import sys
import time

import pytest


class WireKernel:
    """Newline-JSON client over a real sidecar subprocess."""

    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "datasteer_sidecar"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
        self._buf = b""

    def send(self, msg: dict, timeout_s: float = 30.0) -> dict:
        self.write_raw(msg)
        return self.read_reply(timeout_s)

    def write_raw(self, msg: dict) -> None:
        self.proc.stdin.write((json.dumps(msg) + "\n").encode("utf-8"))
        self.proc.stdin.flush()

    def read_reply(self, timeout_s: float = 30.0) -> dict:
        deadline = time.monotonic() + timeout_s
        fd = self.proc.stdout.fileno()
        while True:
            if b"\n" in self._buf:
                line, self._buf = self._buf.split(b"\n", 1)
                return json.loads(line.decode("utf-8"))
            remaining = deadline - time.monotonic()
            assert remaining > 0, "no reply from the sidecar in time"
            ready, _, _ = select.select([fd], [], [], remaining)
            assert ready, "no reply from the sidecar in time"
            chunk = os.read(fd, 65536)
            assert chunk != b"", "sidecar closed its output stream"
            self._buf += chunk

    def interrupt(self) -> None:
        self.proc.send_signal(signal.SIGINT)

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


@pytest.fixture
def wire():
    kernel = WireKernel()
    yield kernel
    kernel.close()
