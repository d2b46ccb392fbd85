"""Deterministic in-process kernel speaking the wire protocol.

The stub evaluates a small, fully deterministic language so the whole
orchestration stack can be tested with no external interpreter:

- assignments of literals and arithmetic (``x = (1 + 2) * 3``),
- bare expression statements (evaluated, value discarded),
- ``print(...)`` writing to the captured stdout,
- list/tuple literals (snapshotted as sequences),
- ``PLOT`` on a line by itself, emitting one fixed 1x1 PNG,
- ``RAISE <ExceptionType>`` forcing an error result,
- comments and blank lines.

Everything in that language that is also valid Python behaves exactly as
Python does, which is what lets one black-box conformance corpus drive
both this stub and a real interpreter backend. Dataset bindings arrive via
the ``load_datasets`` message and behave as inspectable dataframes.

Messages in and out are plain dicts with the same shapes as the
newline-delimited JSON protocol; every execution reply reports the full
current variable list. All results carry ``duration_ms`` 0 so replays are
byte-identical.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

# Smallest valid PNG (1x1 pixel), served for every PLOT directive.
PLOT_PNG_B64 = (
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQ"
    "DwAEhQGAhKmMIQAAAABJRU5ErkJggg=="
)

PREVIEW_ROW_CAP = 10
SEQUENCE_PREVIEW_CAP = 120


@dataclass
class StubFrame:
    """Tabular value created by load_datasets; cells are strings."""

    columns: list[str]
    rows: list[list[str]]


class _DirectiveError(Exception):
    def __init__(self, type_name: str, message: str):
        super().__init__(message)
        self.type_name = type_name


_ALLOWED_BINOPS = (
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.FloorDiv,
    ast.Mod,
    ast.Pow,
)


class StubKernel:
    def __init__(self):
        self.env: dict[str, object] = {}

    # -- protocol entry point -------------------------------------------

    def handle_message(self, msg: dict) -> dict:
        if not isinstance(msg, dict) or "op" not in msg:
            return self._error_reply(None, "ProtocolError", "message has no op")
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
            self.env.clear()
            return self._result(msg_id, "ok", "", None, [])
        if op == "interrupt":
            # executions here are synchronous, so nothing can be in flight
            return {"op": "ack", "id": msg_id}
        return self._error_reply(msg_id, "ProtocolError", f"unknown op {op!r}")

    # -- replies --------------------------------------------------------

    def _result(self, msg_id, status, stdout, error, images) -> dict:
        return {
            "op": "result",
            "id": msg_id,
            "status": status,
            "stdout": stdout,
            "error": error,
            "images": images,
            "variables": self._snapshots(),
            "duration_ms": 0,
        }

    def _error_reply(self, msg_id, type_name, message) -> dict:
        return {
            "op": "error",
            "id": msg_id,
            "error": {"type": type_name, "message": message},
        }

    # -- execution ------------------------------------------------------

    def _execute(self, msg_id, code: str) -> dict:
        stdout: list[str] = []
        images: list[str] = []
        for line_no, line in enumerate(code.split("\n"), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped == "PLOT":
                images.append(PLOT_PNG_B64)
                continue
            if stripped.startswith("RAISE "):
                type_name = stripped[len("RAISE "):].strip() or "Exception"
                return self._result(
                    msg_id,
                    "error",
                    "".join(stdout),
                    self._traceback(type_name, "raised by directive", line_no),
                    images,
                )
            try:
                self._run_line(stripped, stdout)
            except _DirectiveError as exc:
                return self._result(
                    msg_id,
                    "error",
                    "".join(stdout),
                    self._traceback(exc.type_name, str(exc), line_no),
                    images,
                )
            except Exception as exc:
                return self._result(
                    msg_id,
                    "error",
                    "".join(stdout),
                    self._traceback(type(exc).__name__, str(exc), line_no),
                    images,
                )
        return self._result(msg_id, "ok", "".join(stdout), None, images)

    def _run_line(self, line: str, stdout: list[str]) -> None:
        try:
            tree = ast.parse(line, mode="exec")
        except SyntaxError as exc:
            raise _DirectiveError("SyntaxError", exc.msg or "invalid syntax") from None
        for stmt in tree.body:
            if isinstance(stmt, ast.Assign):
                if len(stmt.targets) != 1 or not isinstance(stmt.targets[0], ast.Name):
                    raise _DirectiveError(
                        "SyntaxError", "only single-name assignment targets"
                    )
                self.env[stmt.targets[0].id] = self._eval(stmt.value)
            elif isinstance(stmt, ast.Expr):
                call = stmt.value
                if (
                    isinstance(call, ast.Call)
                    and isinstance(call.func, ast.Name)
                    and call.func.id == "print"
                ):
                    if call.keywords:
                        raise _DirectiveError(
                            "SyntaxError", "print keywords not supported"
                        )
                    parts = [self._render(self._eval(a)) for a in call.args]
                    stdout.append(" ".join(parts) + "\n")
                else:
                    self._eval(call)
            else:
                raise _DirectiveError(
                    "SyntaxError",
                    f"unsupported statement {type(stmt).__name__}",
                )

    def _eval(self, node: ast.expr) -> object:
        if isinstance(node, ast.Constant):
            if node.value is None or isinstance(node.value, (bool, int, float, str)):
                return node.value
            raise _DirectiveError(
                "SyntaxError", f"unsupported literal {type(node.value).__name__}"
            )
        if isinstance(node, ast.Name):
            if node.id in self.env:
                return self.env[node.id]
            raise _DirectiveError("NameError", f"name '{node.id}' is not defined")
        if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            left = self._eval(node.left)
            right = self._eval(node.right)
            return self._apply_binop(node.op, left, right)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            value = self._eval(node.operand)
            return +value if isinstance(node.op, ast.UAdd) else -value
        if isinstance(node, (ast.List, ast.Tuple)):
            items = [self._eval(e) for e in node.elts]
            return items if isinstance(node, ast.List) else tuple(items)
        raise _DirectiveError(
            "SyntaxError", f"unsupported expression {type(node).__name__}"
        )

    @staticmethod
    def _apply_binop(op: ast.operator, left, right):
        if isinstance(op, ast.Add):
            return left + right
        if isinstance(op, ast.Sub):
            return left - right
        if isinstance(op, ast.Mult):
            return left * right
        if isinstance(op, ast.Div):
            return left / right
        if isinstance(op, ast.FloorDiv):
            return left // right
        if isinstance(op, ast.Mod):
            return left % right
        return left**right

    @staticmethod
    def _render(value: object) -> str:
        if isinstance(value, StubFrame):
            return f"<frame {len(value.rows)}x{len(value.columns)}>"
        return str(value)

    @staticmethod
    def _traceback(type_name: str, message: str, line_no: int) -> dict:
        return {
            "type": type_name,
            "message": message,
            "traceback": (
                "Traceback (most recent call last):\n"
                f'  File "<stub>", line {line_no}\n'
                f"{type_name}: {message}"
            ),
        }

    # -- datasets and variables -----------------------------------------

    def _load_datasets(self, msg_id, datasets: list[dict]) -> dict:
        for ds in datasets:
            self.env[ds["binding"]] = StubFrame(
                columns=list(ds.get("columns", [])),
                rows=[list(r) for r in ds.get("rows", [])],
            )
        return self._result(msg_id, "ok", "", None, [])

    def _snapshots(self) -> list[dict]:
        out = []
        for name, value in self.env.items():
            if name.startswith("_"):
                continue
            out.append(self._snapshot(name, value))
        return out

    @staticmethod
    def _snapshot(name: str, value: object) -> dict:
        if isinstance(value, StubFrame):
            return {
                "name": name,
                "kind": "dataframe",
                "type_label": "table",
                "shape": [len(value.rows), len(value.columns)],
                "preview": {
                    "columns": list(value.columns),
                    "rows": [
                        [str(c) for c in r] for r in value.rows[:PREVIEW_ROW_CAP]
                    ],
                },
            }
        if isinstance(value, (list, tuple)):
            preview = str(value)
            if len(preview) > SEQUENCE_PREVIEW_CAP:
                preview = preview[:SEQUENCE_PREVIEW_CAP] + "..."
            return {
                "name": name,
                "kind": "sequence",
                "type_label": type(value).__name__,
                "shape": [len(value), None],
                "preview": preview,
            }
        if value is None or isinstance(value, (bool, int, float, str)):
            return {
                "name": name,
                "kind": "scalar",
                "type_label": type(value).__name__,
                "shape": None,
                "preview": str(value),
            }
        return {
            "name": name,
            "kind": "other",
            "type_label": type(value).__name__,
            "shape": None,
            "preview": repr(value)[:SEQUENCE_PREVIEW_CAP],
        }

    def _fetch_var(self, msg: dict) -> dict:
        msg_id = msg.get("id")
        name = msg.get("name", "")
        if name not in self.env or name.startswith("_"):
            return self._error_reply(
                msg_id, "UnknownVariable", f"no variable named {name!r}"
            )
        value = self.env[name]
        if not isinstance(value, StubFrame):
            return self._error_reply(
                msg_id, "NotTabular", f"variable {name!r} is not tabular"
            )
        needle = (msg.get("filter") or "").lower()
        if needle:
            matched = [
                r for r in value.rows if any(needle in cell.lower() for cell in r)
            ]
        else:
            matched = list(value.rows)
        page = int(msg.get("page") or 0)
        page_size = int(msg.get("page_size") or 50)
        start = page * page_size
        return {
            "op": "var_page",
            "id": msg_id,
            "name": name,
            "columns": list(value.columns),
            "rows": matched[start : start + page_size],
            "total_matches": len(matched),
            "page": page,
            "page_size": page_size,
        }
