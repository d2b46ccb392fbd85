"""Session state: datasets, component graph, side threads, event log.

A session is event-sourced. Every mutation is expressed as an event
``(kind, payload)`` and funneled through :func:`apply_event`, which is the
only code that touches session state. ``Session.record`` applies the event
and then appends it to the log, so replaying the log through the same fold
reconstructs the live state exactly; generation and execution results are
carried inside the events, which is what makes replay possible without a
provider or kernel.

``state_hash`` covers the analytical state (datasets, graph, threads) and
normalizes wall-clock fields (timestamps, execution durations) so that a
replayed or re-executed session hashes identically.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from .blocks import STRATEGIES, NodeContent, block_from_json, block_to_json
from .errors import InvalidStrategy, SchemaViolation, UnknownDataset
from .execution import ExecutionResult, KernelConfig
from .graph import SessionGraph
from .profiling import Dataset, csv_rows, ingest_csv
from .provider import Message, ProviderConfig

SCHEMA_VERSION = 1
DEFAULT_MAX_SUBGOALS = 10


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    payload: dict
    at: str

    def to_json_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload, "at": self.at}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Event":
        return cls(seq=d["seq"], kind=d["kind"], payload=d["payload"], at=d["at"])


@dataclass(frozen=True)
class PromptRecord:
    """One LLM generation: which node it produced and what was sent."""

    node_id: int
    template_id: str
    request_hash: str
    attempts: int
    messages: tuple[Message, ...]


@dataclass
class Session:
    id: str
    strategy: str
    provider: ProviderConfig
    kernel: KernelConfig
    created_at: str = field(default_factory=utc_now)
    max_subgoals: int = DEFAULT_MAX_SUBGOALS
    datasets: dict[str, Dataset] = field(default_factory=dict)
    # raw parsed tables, kept for kernel loading: id -> (columns, rows)
    dataset_tables: dict[str, tuple[list[str], list[list[str]]]] = field(
        default_factory=dict
    )
    selected: list[str] = field(default_factory=list)
    graph: SessionGraph | None = None
    threads: list = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    prompt_log: list[PromptRecord] = field(default_factory=list)

    def record(self, kind: str, payload: dict) -> Any:
        """Apply an event, then log it. Raises without logging on failure."""
        result = apply_event(self, kind, payload)
        self.events.append(
            Event(seq=len(self.events) + 1, kind=kind, payload=payload, at=utc_now())
        )
        return result

    def thread(self, thread_id: str):
        for t in self.threads:
            if t.id == thread_id:
                return t
        raise SchemaViolation(f"no side thread {thread_id}")


def create_session(
    strategy: str,
    provider: ProviderConfig,
    kernel: KernelConfig,
    max_subgoals: int = DEFAULT_MAX_SUBGOALS,
    session_id: str | None = None,
) -> Session:
    if strategy not in STRATEGIES:
        raise InvalidStrategy(f"unknown strategy {strategy!r}")
    sid = session_id if session_id is not None else uuid.uuid4().hex[:12]
    session = Session(id="", strategy="", provider=provider, kernel=kernel)
    session.record(
        "session_created",
        {
            "id": sid,
            "strategy": strategy,
            "created_at": session.created_at,
            "max_subgoals": max_subgoals,
            "provider": provider.to_json_dict(),
            "kernel": kernel.to_json_dict(),
        },
    )
    return session


def add_dataset(session: Session, name: str, raw_bytes: bytes) -> Dataset:
    """Profile a CSV and register it; EmptyFile/DuplicateColumn propagate."""
    dataset = ingest_csv(raw_bytes, name)
    columns, rows = csv_rows(raw_bytes, name)
    return session.record(
        "dataset_added",
        {"dataset": dataset.to_json_dict(), "columns": columns, "rows": rows},
    )


# --- the event fold --------------------------------------------------------

def apply_event(session: Session, kind: str, payload: dict) -> Any:
    """Apply one event's payload to the session state.

    Events that create graph entities may carry the produced ids; the fold
    recomputes them from the deterministic counters and asserts agreement,
    which turns replay into an integrity check.
    """
    if kind == "session_created":
        session.id = payload["id"]
        if payload["strategy"] not in STRATEGIES:
            raise InvalidStrategy(f"unknown strategy {payload['strategy']!r}")
        session.strategy = payload["strategy"]
        session.created_at = payload["created_at"]
        session.max_subgoals = payload.get("max_subgoals", DEFAULT_MAX_SUBGOALS)
        session.provider = ProviderConfig.from_json_dict(payload["provider"])
        session.kernel = KernelConfig.from_json_dict(payload["kernel"])
        return session

    if kind == "dataset_added":
        dataset = Dataset.from_json_dict(payload["dataset"])
        session.datasets[dataset.id] = dataset
        session.dataset_tables[dataset.id] = (
            list(payload["columns"]),
            [list(r) for r in payload["rows"]],
        )
        return dataset

    if kind == "task_started":
        task = block_from_json(payload["task"])
        for ds_id in task.dataset_ids:
            if ds_id not in session.datasets:
                raise UnknownDataset(ds_id)
        session.selected = list(task.dataset_ids)
        session.graph = SessionGraph.new(task)
        return session.graph.node(1)

    graph = session.graph
    if kind in ("node_generated", "node_appended"):
        if graph is None:
            raise SchemaViolation("no task started")
        content = block_from_json(payload["content"])
        node = graph.append_node(payload["branch_id"], payload["kind"], content)
        if "node_id" in payload and payload["node_id"] != node.id:
            raise SchemaViolation(
                f"replay produced node {node.id}, log says {payload['node_id']}"
            )
        if kind == "node_generated":
            session.prompt_log.append(
                PromptRecord(
                    node_id=node.id,
                    template_id=payload["template_id"],
                    request_hash=payload["request_hash"],
                    attempts=payload["attempts"],
                    messages=tuple((r, c) for r, c in payload["messages"]),
                )
            )
        return node

    if kind == "execution_attached":
        if graph is None:
            raise SchemaViolation("no task started")
        node = graph.node(payload["node_id"])
        result = payload["result"]
        node.execution = None if result is None else ExecutionResult.from_json_dict(result)
        return node

    if kind == "edit_applied":
        if graph is None:
            raise SchemaViolation("no task started")
        content = _content_from_payload(payload["content"])
        return graph.edit_node(payload["node_id"], content)

    if kind == "edit_undone":
        if graph is None:
            raise SchemaViolation("no task started")
        graph.undo_pending(payload["node_id"])
        return None

    if kind == "edit_submitted":
        if graph is None:
            raise SchemaViolation("no task started")
        outcome = graph.submit_edit(payload["node_id"])
        expected = payload.get("outcome")
        replayed_branch = outcome.new_branch.id if outcome.new_branch else None
        if expected is not None and (
            expected["new_branch"] != replayed_branch
            or list(expected["invalidated"]) != list(outcome.invalidated)
        ):
            raise SchemaViolation("replayed submit diverged from the log")
        return outcome

    if kind == "branch_switched":
        if graph is None:
            raise SchemaViolation("no task started")
        return graph.switch_branch(payload["branch_id"])

    if kind == "thread_opened":
        from .side import SideThread

        thread = SideThread.from_json_dict(payload["thread"])
        session.threads.append(thread)
        return thread

    if kind == "thread_updated":
        thread = session.thread(payload["thread_id"])
        thread.apply_update(payload)
        return thread

    raise SchemaViolation(f"unknown event kind {kind!r}")


def _content_from_payload(d: dict) -> NodeContent:
    return block_from_json(d)


def replay_events(events: list[Event]) -> Session:
    """Rebuild a session by folding its event log from scratch."""
    session = Session(
        id="",
        strategy="",
        provider=ProviderConfig(mode="scripted", model_name="replay"),
        kernel=KernelConfig(backend="stub"),
    )
    for event in events:
        apply_event(session, event.kind, event.payload)
        session.events.append(event)
    return session


# --- persistence -----------------------------------------------------------

def export_session(session: Session) -> dict:
    """Full snapshot: state plus log. Canonical-dump for byte-stable files."""
    return {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "strategy": session.strategy,
        "created_at": session.created_at,
        "max_subgoals": session.max_subgoals,
        "provider": session.provider.to_json_dict(),
        "kernel": session.kernel.to_json_dict(),
        "datasets": [session.datasets[i].to_json_dict() for i in session.datasets],
        "dataset_tables": {
            ds_id: {"columns": cols, "rows": rows}
            for ds_id, (cols, rows) in session.dataset_tables.items()
        },
        "selected": list(session.selected),
        "graph": None if session.graph is None else session.graph.to_json_dict(),
        "threads": [t.to_json_dict() for t in session.threads],
        "prompt_log": [
            {
                "node_id": p.node_id,
                "template_id": p.template_id,
                "request_hash": p.request_hash,
                "attempts": p.attempts,
                "messages": [[r, c] for r, c in p.messages],
            }
            for p in session.prompt_log
        ],
        "events": [e.to_json_dict() for e in session.events],
    }


def import_session(snapshot: dict) -> Session:
    try:
        if snapshot["schema_version"] != SCHEMA_VERSION:
            raise SchemaViolation(
                f"unsupported schema_version {snapshot['schema_version']!r}"
            )
        session = Session(
            id=snapshot["id"],
            strategy=snapshot["strategy"],
            provider=ProviderConfig.from_json_dict(snapshot["provider"]),
            kernel=KernelConfig.from_json_dict(snapshot["kernel"]),
            created_at=snapshot["created_at"],
            max_subgoals=snapshot["max_subgoals"],
        )
        if session.strategy not in STRATEGIES:
            raise InvalidStrategy(f"unknown strategy {session.strategy!r}")
        for d in snapshot["datasets"]:
            dataset = Dataset.from_json_dict(d)
            session.datasets[dataset.id] = dataset
        for ds_id, table in snapshot["dataset_tables"].items():
            session.dataset_tables[ds_id] = (
                list(table["columns"]),
                [list(r) for r in table["rows"]],
            )
        session.selected = list(snapshot["selected"])
        if snapshot["graph"] is not None:
            session.graph = SessionGraph.from_json_dict(snapshot["graph"])
        from .side import SideThread

        session.threads = [SideThread.from_json_dict(t) for t in snapshot["threads"]]
        session.prompt_log = [
            PromptRecord(
                node_id=p["node_id"],
                template_id=p["template_id"],
                request_hash=p["request_hash"],
                attempts=p["attempts"],
                messages=tuple((r, c) for r, c in p["messages"]),
            )
            for p in snapshot["prompt_log"]
        ]
        session.events = [Event.from_json_dict(e) for e in snapshot["events"]]
        return session
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaViolation(f"malformed session snapshot: {exc}") from exc


# --- state hashing ---------------------------------------------------------

def _normalize_clocks(obj: Any) -> Any:
    """Zero every duration_ms so re-executed sessions hash identically."""
    if isinstance(obj, dict):
        return {
            k: (0 if k == "duration_ms" else _normalize_clocks(v))
            for k, v in obj.items()
        }
    if isinstance(obj, list):
        return [_normalize_clocks(v) for v in obj]
    return obj


def state_hash(session: Session) -> str:
    """Hash of the analytical state; excludes timestamps, logs, durations."""
    state = {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "strategy": session.strategy,
        "datasets": [session.datasets[i].to_json_dict() for i in session.datasets],
        "selected": list(session.selected),
        "graph": None if session.graph is None else session.graph.to_json_dict(),
        "threads": [t.to_json_dict() for t in session.threads],
    }
    blob = canonical_json(_normalize_clocks(state))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


__all__ = [
    "DEFAULT_MAX_SUBGOALS",
    "Event",
    "PromptRecord",
    "SCHEMA_VERSION",
    "Session",
    "add_dataset",
    "apply_event",
    "canonical_json",
    "create_session",
    "export_session",
    "import_session",
    "replay_events",
    "state_hash",
    "utc_now",
]
