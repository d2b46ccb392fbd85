"""Black-box conformance suite for the kernel wire protocol.

Runs against any message endpoint (the in-process stub or a real
interpreter sidecar) through a single ``send(dict) -> dict`` callable, so
both backends are held to the identical corpus. The code snippets stay
inside the subset the stub evaluates with Python semantics, which is what
makes the corpus portable.

Each check either returns None or raises AssertionError with the check
name in the message.
"""

from __future__ import annotations

import base64
from typing import Callable

Send = Callable[[dict], dict]

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

CONFORMANCE_DATASET = {
    "binding": "df_jobs",
    "name": "jobs.csv",
    "columns": ["Title", "Country", "Salary"],
    "rows": [
        ["Data Scientist", "US", "120000"],
        ["Analyst", "DE", "70000"],
        ["ML Engineer", "us", "135000"],
        ["Statistician", "FR", "80000"],
    ],
}


def _expect(cond: bool, name: str, detail: str) -> None:
    assert cond, f"[{name}] {detail}"


def check_ping(send: Send) -> None:
    reply = send({"op": "ping"})
    _expect(reply.get("op") == "pong", "ping", f"expected pong, got {reply}")


def check_execute_result_shape(send: Send) -> None:
    reply = send({"op": "execute", "id": "c1", "code": "x = 1 + 1\nprint(x)"})
    _expect(reply.get("op") == "result", "execute", f"op was {reply.get('op')}")
    _expect(reply.get("id") == "c1", "execute", "reply id must echo request id")
    _expect(reply.get("status") == "ok", "execute", f"status {reply.get('status')}")
    _expect(reply.get("stdout") == "2\n", "execute", f"stdout {reply.get('stdout')!r}")
    _expect(reply.get("error") is None, "execute", "error must be null on ok")
    _expect(reply.get("images") == [], "execute", "no images expected")
    names = [v["name"] for v in reply.get("variables", [])]
    _expect("x" in names, "execute", f"x missing from variables {names}")
    x = next(v for v in reply["variables"] if v["name"] == "x")
    _expect(x["kind"] == "scalar", "execute", f"x kind {x['kind']}")
    _expect(x["preview"] == "2", "execute", f"x preview {x['preview']!r}")


def check_variable_order_and_overwrite(send: Send) -> None:
    send({"op": "reset", "id": "c2"})
    reply = send({"op": "execute", "id": "c3", "code": "a = 1\nb = 2"})
    names = [v["name"] for v in reply["variables"]]
    _expect(names == ["a", "b"], "var-order", f"creation order lost: {names}")
    reply = send({"op": "execute", "id": "c4", "code": "a = 99"})
    snaps = [v for v in reply["variables"] if v["name"] == "a"]
    _expect(len(snaps) == 1, "overwrite", f"{len(snaps)} snapshots for one name")
    _expect(snaps[0]["preview"] == "99", "overwrite", "final state must win")


def check_sequence_kind(send: Send) -> None:
    reply = send(
        {"op": "execute", "id": "c5", "code": "words = ['alpha', 'beta', 'gamma']"}
    )
    snap = next(v for v in reply["variables"] if v["name"] == "words")
    _expect(snap["kind"] == "sequence", "sequence", f"kind {snap['kind']}")
    _expect(
        snap["shape"] and snap["shape"][0] == 3, "sequence", f"shape {snap['shape']}"
    )


def check_underscore_names_hidden(send: Send) -> None:
    reply = send({"op": "execute", "id": "c6", "code": "_tmp = 5\nkeep = 6"})
    names = [v["name"] for v in reply["variables"]]
    _expect("_tmp" not in names, "underscore", f"_tmp leaked into {names}")
    _expect("keep" in names, "underscore", f"keep missing from {names}")


def check_error_containment(send: Send) -> None:
    reply = send({"op": "execute", "id": "c7", "code": "y = 1\n1/0"})
    _expect(reply["status"] == "error", "containment", f"status {reply['status']}")
    err = reply.get("error") or {}
    _expect(
        err.get("type") == "ZeroDivisionError",
        "containment",
        f"error type {err.get('type')}",
    )
    _expect(bool(err.get("traceback")), "containment", "traceback must be populated")
    # the kernel survives: the next execution succeeds and sees prior state
    reply = send({"op": "execute", "id": "c8", "code": "z = y + 10"})
    _expect(reply["status"] == "ok", "containment", "kernel did not stay usable")
    z = next(v for v in reply["variables"] if v["name"] == "z")
    _expect(z["preview"] == "11", "containment", f"z preview {z['preview']!r}")


def check_load_datasets(send: Send) -> None:
    reply = send(
        {"op": "load_datasets", "id": "c9", "datasets": [CONFORMANCE_DATASET]}
    )
    _expect(reply["status"] == "ok", "load", f"status {reply['status']}")
    snap = next(v for v in reply["variables"] if v["name"] == "df_jobs")
    _expect(snap["kind"] == "dataframe", "load", f"kind {snap['kind']}")
    _expect(list(snap["shape"]) == [4, 3], "load", f"shape {snap['shape']}")
    _expect(
        snap["preview"]["columns"] == ["Title", "Country", "Salary"],
        "load",
        f"columns {snap['preview']['columns']}",
    )
    _expect(len(snap["preview"]["rows"]) == 4, "load", "preview rows missing")


def check_fetch_var_filter_paging(send: Send) -> None:
    reply = send({"op": "fetch_var", "id": "c10", "name": "df_jobs"})
    _expect(reply["op"] == "var_page", "fetch", f"op {reply['op']}")
    _expect(reply["total_matches"] == 4, "fetch", f"total {reply['total_matches']}")
    _expect(len(reply["rows"]) == 4, "fetch", "all rows expected on empty filter")

    # case-insensitive substring across every cell
    reply = send({"op": "fetch_var", "id": "c11", "name": "df_jobs", "filter": "US"})
    _expect(
        reply["total_matches"] == 2, "filter", f"total {reply['total_matches']}"
    )
    countries = sorted(r[1] for r in reply["rows"])
    _expect(countries == ["US", "us"], "filter", f"matched {countries}")

    # stable pagination over the filtered rows
    page0 = send(
        {
            "op": "fetch_var",
            "id": "c12",
            "name": "df_jobs",
            "filter": "us",
            "page": 0,
            "page_size": 1,
        }
    )
    page1 = send(
        {
            "op": "fetch_var",
            "id": "c13",
            "name": "df_jobs",
            "filter": "us",
            "page": 1,
            "page_size": 1,
        }
    )
    _expect(page0["total_matches"] == 2, "paging", "total on page 0")
    _expect(page1["total_matches"] == 2, "paging", "total on page 1")
    _expect(len(page0["rows"]) == 1 and len(page1["rows"]) == 1, "paging", "1 per page")
    _expect(page0["rows"] != page1["rows"], "paging", "pages must not repeat rows")
    again = send(
        {
            "op": "fetch_var",
            "id": "c14",
            "name": "df_jobs",
            "filter": "us",
            "page": 0,
            "page_size": 1,
        }
    )
    _expect(again["rows"] == page0["rows"], "paging", "pagination must be stable")


def check_fetch_var_errors(send: Send) -> None:
    reply = send({"op": "fetch_var", "id": "c15", "name": "no_such_thing"})
    _expect(reply.get("op") == "error", "fetch-errors", f"op {reply.get('op')}")
    _expect(
        reply["error"]["type"] == "UnknownVariable",
        "fetch-errors",
        f"type {reply['error']['type']}",
    )
    send({"op": "execute", "id": "c16", "code": "just_a_number = 7"})
    reply = send({"op": "fetch_var", "id": "c17", "name": "just_a_number"})
    _expect(
        reply.get("op") == "error" and reply["error"]["type"] == "NotTabular",
        "fetch-errors",
        f"scalar fetch gave {reply}",
    )


def check_reset(send: Send) -> None:
    send({"op": "execute", "id": "c18", "code": "gone = 1"})
    reply = send({"op": "reset", "id": "c19"})
    _expect(reply["status"] == "ok", "reset", f"status {reply['status']}")
    _expect(reply["variables"] == [], "reset", f"variables {reply['variables']}")


def check_unknown_op(send: Send) -> None:
    reply = send({"op": "levitate", "id": "c20"})
    _expect(reply.get("op") == "error", "unknown-op", f"got {reply}")


def check_plot_capture(send: Send, plot_code: str) -> None:
    """Backend-specific plotting snippet must yield decodable PNG bytes."""
    reply = send({"op": "execute", "id": "c21", "code": plot_code})
    _expect(reply["status"] == "ok", "plot", f"status {reply['status']}")
    images = reply.get("images", [])
    _expect(len(images) >= 1, "plot", "no image captured")
    for img in images:
        raw = base64.b64decode(img)
        _expect(raw[:8] == PNG_SIGNATURE, "plot", "bytes are not a PNG")


CHECKS = (
    check_ping,
    check_execute_result_shape,
    check_variable_order_and_overwrite,
    check_sequence_kind,
    check_underscore_names_hidden,
    check_error_containment,
    check_load_datasets,
    check_fetch_var_filter_paging,
    check_fetch_var_errors,
    check_reset,
    check_unknown_op,
)


def run_conformance(send: Send) -> list[str]:
    """Run every shared check in order; returns the names that ran."""
    ran = []
    for check in CHECKS:
        check(send)
        ran.append(check.__name__)
    return ran
