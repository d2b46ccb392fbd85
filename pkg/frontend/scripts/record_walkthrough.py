"""Record the Task-1 phasewise walkthrough as request/response fixtures.

Drives the real HTTP server (scripted provider, stub kernel) through the
exact call sequence the browser client makes, and writes every exchange
to tests/fixtures/walkthrough.json. The UI test suite replays the
responses and asserts the client emits the same requests.

Novel prompts (the chip edit below changes regeneration context) are
answered by the deterministic fake model and written into the shared
LLM fixture corpus, same as the recording mode of the main test suite.

Usage: python3 scripts/record_walkthrough.py   (from frontend/)
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))

import datasteer.repair as repair_module
from datasteer.errors import FixtureMissing
from datasteer.provider import fixture_path, request_hash
from datasteer.server import Settings, create_app
from fastapi.testclient import TestClient

from tests.fakellm import TASKS, FakeLLM

LLM_FIXTURES = ROOT / "tests" / "fixtures" / "llm"
DATASET = ROOT / "tests" / "fixtures" / "datasets" / "big-basket-products.csv"
OUT = ROOT / "frontend" / "tests" / "fixtures" / "walkthrough.json"

EDITED_ASSUMPTION = "`Rating` values may end with the word stars"
EDITED_ACTION = "strip the suffix and parse the leading number"


def install_record_on_miss() -> None:
    fake = FakeLLM()
    real_complete = repair_module.complete

    def recording_complete(messages, config):
        try:
            return real_complete(messages, config)
        except FixtureMissing:
            raw = fake.respond(list(messages))
            path = fixture_path(config.fixture_dir, request_hash(list(messages)))
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(raw, encoding="utf-8")
            return raw

    repair_module.complete = recording_complete


class Recorder:
    def __init__(self, client: TestClient):
        self.client = client
        self.exchanges: list[dict] = []

    def call(
        self, step: str, method: str, path: str, *, meta: bool = False, **kwargs
    ) -> dict:
        response = self.client.request(method, path, **kwargs)
        request: dict = {"method": method, "path": path}
        if meta:
            # fetched for the fixture's benefit, never emitted by the client
            request["meta"] = True
        if "json" in kwargs:
            request["body"] = kwargs["json"]
        if "files" in kwargs:
            name, (filename, content, ctype) = next(iter(kwargs["files"].items()))
            request["upload"] = {
                "field": name,
                "filename": filename,
                "content": content.decode("utf-8"),
                "content_type": ctype,
            }
        content_type = response.headers.get("content-type", "")
        body: object
        if content_type.startswith("text/event-stream"):
            body = response.text
        else:
            body = response.json()
        self.exchanges.append(
            {
                "step": step,
                "request": request,
                "response": {"status": response.status_code, "body": body},
            }
        )
        if response.status_code >= 400:
            raise SystemExit(f"step {step} failed {response.status_code}: {body}")
        return body if isinstance(body, dict) else {}


def main() -> None:
    install_record_on_miss()
    with tempfile.TemporaryDirectory() as data_dir:
        settings = Settings(
            data_dir=data_dir,
            provider_mode="scripted",
            fixture_dir=str(LLM_FIXTURES),
            kernel_backend="stub",
        )
        client = TestClient(create_app(settings))
        rec = Recorder(client)

        # the call order below is exactly what the browser client emits
        # for this walkthrough; the UI test replays it strictly
        view = rec.call(
            "create_session",
            "POST",
            "/sessions",
            json={"strategy": "phasewise", "max_subgoals": 10},
        )
        sid = view["id"]

        uploaded = rec.call(
            "upload_dataset",
            "POST",
            f"/sessions/{sid}/datasets",
            files={
                "file": (DATASET.name, DATASET.read_bytes(), "text/csv")
            },
        )
        dataset_id = uploaded["dataset"]["id"]
        rec.call("refresh_after_upload", "GET", f"/sessions/{sid}")

        started = rec.call(
            "start_task",
            "POST",
            f"/sessions/{sid}/query",
            json={"query": TASKS[0].query, "dataset_ids": [dataset_id]},
        )
        assumptions_id = started["created"][-1]["id"]

        rec.call("advance_to_plan", "POST", f"/sessions/{sid}/advance")
        rec.call("advance_to_code", "POST", f"/sessions/{sid}/advance")

        rec.call("list_variables", "GET", f"/sessions/{sid}/variables")

        rec.call(
            "edit_chip",
            "POST",
            f"/sessions/{sid}/nodes/{assumptions_id}/phase-a",
            json={
                "op": "edit_assumption",
                "column": "Rating",
                "index": 0,
                "assumption": EDITED_ASSUMPTION,
                "action": EDITED_ACTION,
            },
        )
        rec.call("refresh_pending", "GET", f"/sessions/{sid}")

        rec.call(
            "submit_edit", "POST", f"/sessions/{sid}/nodes/{assumptions_id}/submit"
        )

        rec.call("list_variables_after", "GET", f"/sessions/{sid}/variables")

        rec.call(
            "inspect_open",
            "GET",
            f"/sessions/{sid}/variables/nivea_rows"
            "?filter=&page=0&page_size=50",
        )
        rec.call(
            "inspect_filtered",
            "GET",
            f"/sessions/{sid}/variables/nivea_rows"
            "?filter=Nivea&page=0&page_size=50",
        )

        final = rec.call("final_view", "GET", f"/sessions/{sid}")
        rec.call(
            "event_replay",
            "GET",
            f"/sessions/{sid}/events?after=0&limit={final['last_seq']}",
            meta=True,
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps({"exchanges": rec.exchanges}, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"recorded {len(rec.exchanges)} exchanges -> {OUT}")


if __name__ == "__main__":
    main()
