"""Real-interpreter kernel behind the newline-JSON wire protocol.

One persistent namespace per process: bindings survive across execute
messages until a reset, and protocol bookkeeping stays out of the user's
way by living on the kernel object, not in the namespace. Plots render
through the non-interactive Agg backend and are flushed to base64 PNG
after every execute, with the figures closed so nothing leaks into the
next cell. Tracebacks are trimmed to the frames of the executed code.
"""

from __future__ import annotations

import base64
import contextlib
import io
import time
import traceback

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

PREVIEW_ROW_CAP = 10
SEQUENCE_PREVIEW_CAP = 120


class SidecarKernel:
    """Executes protocol messages against one live namespace."""

    def __init__(self):
        self.namespace: dict[str, object] = {}
        self.execution_counter = 0
        self.loaded_datasets: dict[str, str] = {}  # binding -> source name

    # -- protocol entry point -------------------------------------------

    def handle_message(self, msg) -> dict:
        if not isinstance(msg, dict) or "op" not in msg:
            return _error_reply(None, "ProtocolError", "message has no op")
        op = msg.get("op")
        msg_id = msg.get("id")
        if op == "ping":
            reply = {"op": "pong"}
            if msg_id is not None:
                reply["id"] = msg_id
            return reply
        if op == "execute":
            return self._execute(msg_id, msg.get("code", ""))
        if op == "load_datasets":
            return self._load_datasets(msg_id, msg.get("datasets", []))
        if op == "fetch_var":
            return self._fetch_var(msg)
        if op == "reset":
            self.namespace.clear()
            self.loaded_datasets.clear()
            return self._result(msg_id, "ok", "", None, [], 0)
        if op == "interrupt":
            # the message loop is synchronous: by the time this arrives,
            # nothing is running here
            return {"op": "ack", "id": msg_id}
        return _error_reply(msg_id, "ProtocolError", f"unknown op {op!r}")

    # -- execution ------------------------------------------------------

    def _execute(self, msg_id, code: str) -> dict:
        self.execution_counter += 1
        cell = f"<cell {self.execution_counter}>"
        buf = io.StringIO()
        started = time.monotonic()
        status, error = "ok", None
        try:
            compiled = compile(code, cell, "exec")
            with contextlib.redirect_stdout(buf):
                exec(compiled, self.namespace)
        except BaseException as exc:  # the kernel itself must survive anything
            status, error = "error", _serialize_error(exc, cell)
        images = _flush_figures()
        duration_ms = int((time.monotonic() - started) * 1000)
        return self._result(msg_id, status, buf.getvalue(), error, images, duration_ms)

    def _load_datasets(self, msg_id, datasets) -> dict:
        for ds in datasets:
            binding = ds.get("binding") or "df_data"
            columns = [str(c) for c in ds.get("columns", [])]
            rows = [list(r) for r in ds.get("rows", [])]
            # cells stay the exact strings the orchestrator parsed;
            # analysis code casts what it needs
            frame = pd.DataFrame(rows, columns=columns, dtype=object)
            self.namespace[binding] = frame
            self.loaded_datasets[binding] = ds.get("name", "")
        return self._result(msg_id, "ok", "", None, [], 0)

    # -- variable inspection --------------------------------------------

    def _fetch_var(self, msg: dict) -> dict:
        msg_id = msg.get("id")
        name = msg.get("name", "")
        if name.startswith("_") or name not in self.namespace:
            return _error_reply(msg_id, "UnknownVariable", f"no variable named {name!r}")
        value = self.namespace[name]
        if not isinstance(value, pd.DataFrame):
            return _error_reply(msg_id, "NotTabular", f"variable {name!r} is not tabular")
        cells = [[str(c) for c in row] for row in value.itertuples(index=False)]
        needle = (msg.get("filter") or "").lower()
        if needle:
            matched = [r for r in cells if any(needle in cell.lower() for cell in r)]
        else:
            matched = cells
        page = int(msg.get("page") or 0)
        page_size = int(msg.get("page_size") or 50)
        start = page * page_size
        return {
            "op": "var_page",
            "id": msg_id,
            "name": name,
            "columns": [str(c) for c in value.columns],
            "rows": matched[start : start + page_size],
            "total_matches": len(matched),
            "page": page,
            "page_size": page_size,
        }

    # -- replies --------------------------------------------------------

    def _result(self, msg_id, status, stdout, error, images, duration_ms) -> dict:
        return {
            "op": "result",
            "id": msg_id,
            "status": status,
            "stdout": stdout,
            "error": error,
            "images": images,
            "variables": self._snapshots(),
            "duration_ms": duration_ms,
        }

    def _snapshots(self) -> list[dict]:
        return [
            _snapshot(name, value)
            for name, value in self.namespace.items()
            if not name.startswith("_")
        ]


def _snapshot(name: str, value: object) -> dict:
    if isinstance(value, pd.DataFrame):
        head = value.head(PREVIEW_ROW_CAP)
        return {
            "name": name,
            "kind": "dataframe",
            "type_label": type(value).__name__,
            "shape": [int(value.shape[0]), int(value.shape[1])],
            "preview": {
                "columns": [str(c) for c in value.columns],
                "rows": [[str(c) for c in row] for row in head.itertuples(index=False)],
            },
        }
    if isinstance(value, pd.Series):
        preview = _cap(str(value.to_list()))
        return {
            "name": name,
            "kind": "sequence",
            "type_label": type(value).__name__,
            "shape": [int(value.shape[0]), None],
            "preview": preview,
        }
    if isinstance(value, np.ndarray):
        return {
            "name": name,
            "kind": "sequence",
            "type_label": type(value).__name__,
            "shape": [int(d) for d in value.shape] or [0],
            "preview": _cap(np.array2string(value, threshold=20)),
        }
    if isinstance(value, (list, tuple)):
        return {
            "name": name,
            "kind": "sequence",
            "type_label": type(value).__name__,
            "shape": [len(value), None],
            "preview": _cap(str(value)),
        }
    if value is None or isinstance(value, (bool, int, float, str)):
        return {
            "name": name,
            "kind": "scalar",
            "type_label": type(value).__name__,
            "shape": None,
            "preview": str(value),
        }
    if isinstance(value, np.generic):
        # numpy scalars read like plain numbers in the inspector
        return {
            "name": name,
            "kind": "scalar",
            "type_label": type(value).__name__,
            "shape": None,
            "preview": str(value.item()),
        }
    return {
        "name": name,
        "kind": "other",
        "type_label": type(value).__name__,
        "shape": None,
        "preview": _cap(repr(value)),
    }


def _cap(text: str) -> str:
    if len(text) > SEQUENCE_PREVIEW_CAP:
        return text[:SEQUENCE_PREVIEW_CAP] + "..."
    return text


def _serialize_error(exc: BaseException, cell: str) -> dict:
    tb = exc.__traceback__
    while tb is not None and tb.tb_frame.f_code.co_filename != cell:
        tb = tb.tb_next
    if tb is None:
        # no user frame (syntax errors, interrupts before the first line)
        text = "".join(traceback.format_exception_only(type(exc), exc))
    else:
        text = "".join(traceback.format_exception(type(exc), exc, tb))
    return {
        "type": type(exc).__name__,
        "message": str(exc),
        "traceback": text.rstrip("\n"),
    }


def _flush_figures() -> list[str]:
    images: list[str] = []
    for num in plt.get_fignums():
        fig = plt.figure(num)
        out = io.BytesIO()
        try:
            fig.savefig(out, format="png")
        except Exception:
            continue  # a half-built figure must not poison the reply
        images.append(base64.b64encode(out.getvalue()).decode("ascii"))
    plt.close("all")
    return images


def _error_reply(msg_id, type_name: str, message: str) -> dict:
    return {
        "op": "error",
        "id": msg_id,
        "error": {"type": type_name, "message": message},
    }
