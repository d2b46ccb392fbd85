"""Kernel semantics: snapshots, errors, datasets, inspection, reset."""

from __future__ import annotations

import time

from datasteer_sidecar import SidecarKernel

JOBS = {
    "binding": "df_jobs",
    "name": "jobs.csv",
    "columns": ["Title", "Country", "Salary"],
    "rows": [
        ["Data Scientist", "US", "120000"],
        ["Analyst", "DE", "70000"],
        ["ML Engineer", "us", "135000"],
        ["Statistician", "FR", "80000"],
        ["Economist", "BR", "65000"],
    ],
}


def snap_of(reply: dict, name: str) -> dict:
    return next(v for v in reply["variables"] if v["name"] == name)


class TestExecution:
    def test_namespace_persists_across_executes(self):
        k = SidecarKernel()
        reply = k.handle_message({"op": "execute", "id": "1", "code": "x = 2 * 21"})
        assert reply["status"] == "ok"
        assert snap_of(reply, "x")["preview"] == "42"
        reply = k.handle_message({"op": "execute", "id": "2", "code": "y = x + 1"})
        assert snap_of(reply, "y")["preview"] == "43"

    def test_stdout_is_captured_into_the_result(self):
        k = SidecarKernel()
        reply = k.handle_message(
            {"op": "execute", "id": "1", "code": "print('a')\nprint(7)"}
        )
        assert reply["stdout"] == "a\n7\n"

    def test_error_is_contained_and_kernel_stays_usable(self):
        k = SidecarKernel()
        reply = k.handle_message(
            {"op": "execute", "id": "1", "code": "kept = 5\nraise RuntimeError('boom')"}
        )
        assert reply["status"] == "error"
        assert reply["error"]["type"] == "RuntimeError"
        assert reply["error"]["message"] == "boom"
        reply = k.handle_message({"op": "execute", "id": "2", "code": "more = kept + 1"})
        assert reply["status"] == "ok"
        assert snap_of(reply, "more")["preview"] == "6"

    def test_traceback_is_trimmed_to_executed_code(self):
        k = SidecarKernel()
        code = "def boom():\n    raise ValueError('inner')\n\nboom()"
        reply = k.handle_message({"op": "execute", "id": "1", "code": code})
        tb = reply["error"]["traceback"]
        assert "<cell 1>" in tb
        assert "ValueError: inner" in tb
        assert "kernel.py" not in tb  # protocol bookkeeping frames elided

    def test_syntax_error_reports_without_user_frames(self):
        k = SidecarKernel()
        reply = k.handle_message({"op": "execute", "id": "1", "code": "def ("})
        assert reply["status"] == "error"
        assert reply["error"]["type"] == "SyntaxError"
        assert reply["error"]["traceback"]

    def test_duration_is_reported(self):
        k = SidecarKernel()
        reply = k.handle_message(
            {"op": "execute", "id": "1", "code": "import time\ntime.sleep(0.05)"}
        )
        assert reply["duration_ms"] >= 40


class TestSnapshots:
    def test_dataframe_preview_shape_columns_and_rows(self):
        k = SidecarKernel()
        code = (
            "import pandas as pd\n"
            "small = pd.DataFrame({'a': [1, 2, 3], 'b': ['x', 'y', 'z']})"
        )
        snap = snap_of(k.handle_message({"op": "execute", "id": "1", "code": code}), "small")
        assert snap["kind"] == "dataframe"
        assert snap["shape"] == [3, 2]
        assert snap["preview"]["columns"] == ["a", "b"]
        assert snap["preview"]["rows"] == [["1", "x"], ["2", "y"], ["3", "z"]]

    def test_huge_dataframe_previews_exactly_ten_rows(self):
        k = SidecarKernel()
        code = "import pandas as pd\nbig = pd.DataFrame({'n': range(100000)})"
        snap = snap_of(k.handle_message({"op": "execute", "id": "1", "code": code}), "big")
        assert snap["shape"] == [100000, 1]
        assert len(snap["preview"]["rows"]) == 10

    def test_series_and_ndarray_are_sequences(self):
        k = SidecarKernel()
        code = (
            "import pandas as pd\nimport numpy as np\n"
            "ser = pd.Series([4, 5, 6])\narr = np.arange(6)"
        )
        reply = k.handle_message({"op": "execute", "id": "1", "code": code})
        assert snap_of(reply, "ser")["kind"] == "sequence"
        assert snap_of(reply, "ser")["shape"][0] == 3
        assert snap_of(reply, "arr")["kind"] == "sequence"
        assert snap_of(reply, "arr")["shape"] == [6]

    def test_numpy_scalar_reads_like_a_number(self):
        k = SidecarKernel()
        code = "import numpy as np\nval = np.int64(7)"
        snap = snap_of(k.handle_message({"op": "execute", "id": "1", "code": code}), "val")
        assert snap["kind"] == "scalar"
        assert snap["preview"] == "7"

    def test_set_is_kind_other_with_type_label(self):
        k = SidecarKernel()
        snap = snap_of(
            k.handle_message({"op": "execute", "id": "1", "code": "s = {1}"}), "s"
        )
        assert snap["kind"] == "other"
        assert snap["type_label"] == "set"

    def test_underscore_bookkeeping_stays_hidden(self):
        k = SidecarKernel()
        reply = k.handle_message(
            {"op": "execute", "id": "1", "code": "_internal = 1\nshown = 2"}
        )
        names = [v["name"] for v in reply["variables"]]
        assert "shown" in names
        assert "_internal" not in names

    def test_long_sequence_preview_is_capped(self):
        k = SidecarKernel()
        reply = k.handle_message(
            {"op": "execute", "id": "1", "code": "big_list = list(range(500))"}
        )
        preview = snap_of(reply, "big_list")["preview"]
        assert len(preview) <= 123
        assert preview.endswith("...")


class TestDatasetsAndFetch:
    def test_load_binds_string_cells_under_the_given_name(self):
        k = SidecarKernel()
        reply = k.handle_message({"op": "load_datasets", "id": "1", "datasets": [JOBS]})
        assert reply["status"] == "ok"
        snap = snap_of(reply, "df_jobs")
        assert snap["kind"] == "dataframe"
        assert snap["shape"] == [5, 3]
        assert snap["preview"]["rows"][0] == ["Data Scientist", "US", "120000"]
        assert k.loaded_datasets == {"df_jobs": "jobs.csv"}

    def test_load_without_binding_falls_back(self):
        k = SidecarKernel()
        ds = dict(JOBS)
        del ds["binding"]
        reply = k.handle_message({"op": "load_datasets", "id": "1", "datasets": [ds]})
        assert any(v["name"] == "df_data" for v in reply["variables"])

    def test_filter_is_case_insensitive_across_cells(self):
        k = SidecarKernel()
        k.handle_message({"op": "load_datasets", "id": "1", "datasets": [JOBS]})
        reply = k.handle_message(
            {"op": "fetch_var", "id": "2", "name": "df_jobs", "filter": "US"}
        )
        assert reply["total_matches"] == 2
        assert sorted(r[1] for r in reply["rows"]) == ["US", "us"]

    def test_empty_filter_returns_all_rows_in_order(self):
        k = SidecarKernel()
        k.handle_message({"op": "load_datasets", "id": "1", "datasets": [JOBS]})
        reply = k.handle_message({"op": "fetch_var", "id": "2", "name": "df_jobs"})
        assert reply["total_matches"] == 5
        assert [r[0] for r in reply["rows"]] == [
            "Data Scientist",
            "Analyst",
            "ML Engineer",
            "Statistician",
            "Economist",
        ]

    def test_page_beyond_end_is_empty_with_correct_total(self):
        k = SidecarKernel()
        k.handle_message({"op": "load_datasets", "id": "1", "datasets": [JOBS]})
        reply = k.handle_message(
            {"op": "fetch_var", "id": "2", "name": "df_jobs", "page": 9, "page_size": 2}
        )
        assert reply["rows"] == []
        assert reply["total_matches"] == 5

    def test_fetch_rejects_missing_and_underscore_names(self):
        k = SidecarKernel()
        reply = k.handle_message({"op": "fetch_var", "id": "1", "name": "ghost"})
        assert reply["error"]["type"] == "UnknownVariable"
        k.handle_message({"op": "execute", "id": "2", "code": "_h = 1"})
        reply = k.handle_message({"op": "fetch_var", "id": "3", "name": "_h"})
        assert reply["error"]["type"] == "UnknownVariable"

    def test_fetch_rejects_non_tabular(self):
        k = SidecarKernel()
        k.handle_message({"op": "execute", "id": "1", "code": "num = 3"})
        reply = k.handle_message({"op": "fetch_var", "id": "2", "name": "num"})
        assert reply["error"]["type"] == "NotTabular"


class TestResetAndProtocol:
    def test_reset_clears_everything_and_is_idempotent(self):
        k = SidecarKernel()
        k.handle_message({"op": "load_datasets", "id": "1", "datasets": [JOBS]})
        k.handle_message({"op": "execute", "id": "2", "code": "gone = 1"})
        reply = k.handle_message({"op": "reset", "id": "3"})
        assert reply["status"] == "ok"
        assert reply["variables"] == []
        assert k.loaded_datasets == {}
        again = k.handle_message({"op": "reset", "id": "4"})
        assert again["status"] == "ok"
        assert again["variables"] == []

    def test_malformed_and_unknown_messages_get_protocol_errors(self):
        k = SidecarKernel()
        assert k.handle_message({"nope": 1})["error"]["type"] == "ProtocolError"
        assert k.handle_message("not a dict")["error"]["type"] == "ProtocolError"
        reply = k.handle_message({"op": "levitate", "id": "9"})
        assert reply["op"] == "error"
        assert reply["id"] == "9"


class TestWireLoop:
    def test_bad_json_line_gets_an_error_reply_not_an_exit(self, wire):
        wire.proc.stdin.write(b"{this is not json\n")
        wire.proc.stdin.flush()
        reply = wire.read_reply()
        assert reply["error"]["type"] == "ProtocolError"
        assert wire.send({"op": "ping"})["op"] == "pong"

    def test_user_prints_never_corrupt_the_protocol_stream(self, wire):
        reply = wire.send(
            {"op": "execute", "id": "1", "code": "print('{\"op\": \"fake\"}')"}
        )
        assert reply["op"] == "result"
        assert reply["stdout"] == '{"op": "fake"}\n'
        assert wire.send({"op": "ping"})["op"] == "pong"

    def test_interrupt_stops_the_cell_and_kernel_survives(self, wire):
        wire.write_raw(
            {"op": "execute", "id": "slow", "code": "import time\ntime.sleep(30)"}
        )
        time.sleep(0.7)  # let the cell reach the sleep
        wire.interrupt()
        reply = wire.read_reply(timeout_s=10.0)
        assert reply["status"] == "error"
        assert reply["error"]["type"] == "KeyboardInterrupt"
        after = wire.send({"op": "execute", "id": "next", "code": "alive = 1"})
        assert after["status"] == "ok"
