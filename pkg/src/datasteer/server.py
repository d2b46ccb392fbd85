"""HTTP and event-stream service over sessions, engine, kernels, and threads.

Commands are JSON over HTTP; each session also exposes a server-sent
event stream so clients follow generation and execution without polling.
Every mutating endpoint funnels through its session's single-writer lock,
and the session's new events are appended to its on-disk log before the
response is sent. One directory per session (events.jsonl, snapshot.json,
datasets/) makes the store inspectable and diffable.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import engine, side
from .blocks import block_from_json, block_to_json
from .errors import (
    AnchorNodeGone,
    DatasteerError,
    DuplicateColumn,
    EmptyFile,
    ExecutionTimeout,
    FixtureMissing,
    InvalidSelection,
    InvalidStrategy,
    KernelBusy,
    KernelDead,
    KernelStartFailure,
    MaxSubgoalsExceeded,
    MissingPlaceholder,
    NotEditable,
    NothingPending,
    NotOptional,
    NotTabular,
    ParseError,
    PendingEditsExist,
    ProviderUnavailable,
    RejectedColumns,
    SchemaViolation,
    SelectionRequired,
    StaleBranch,
    ThreadNotAnswered,
    UnknownBranch,
    UnknownColumn,
    UnknownDataset,
    UnknownNode,
    UnknownVariable,
    UnparseableAfterRetries,
    WrongStrategy,
)
from .execution import KernelConfig, KernelManager
from .profiling import summarize_dataset
from .provider import ProviderConfig
from .session import (
    Event,
    Session,
    add_dataset,
    canonical_json,
    create_session,
    export_session,
    import_session,
    replay_events,
)

logger = logging.getLogger("datasteer.server")

PROVIDER_MODES = ("live", "scripted")

_STATUS: dict[type, int] = {
    SchemaViolation: 400,
    UnknownNode: 404,
    UnknownBranch: 404,
    UnknownVariable: 404,
    NothingPending: 409,
    PendingEditsExist: 409,
    StaleBranch: 409,
    NotEditable: 409,
    NotOptional: 409,
    WrongStrategy: 409,
    ThreadNotAnswered: 409,
    AnchorNodeGone: 409,
    MaxSubgoalsExceeded: 409,
    KernelBusy: 409,
    InvalidStrategy: 422,
    EmptyFile: 422,
    DuplicateColumn: 422,
    UnknownDataset: 422,
    UnknownColumn: 422,
    SelectionRequired: 422,
    InvalidSelection: 422,
    ParseError: 422,
    UnparseableAfterRetries: 422,
    RejectedColumns: 422,
    NotTabular: 422,
    MissingPlaceholder: 422,
    ProviderUnavailable: 502,
    FixtureMissing: 502,
    KernelStartFailure: 500,
    KernelDead: 500,
    ExecutionTimeout: 500,
}


def error_body(exc: DatasteerError) -> dict:
    body = {"error": type(exc).__name__, "detail": str(exc)}
    if hasattr(exc, "request_hash"):
        body["request_hash"] = exc.request_hash
    if hasattr(exc, "node_ids"):
        body["node_ids"] = list(exc.node_ids)
    if hasattr(exc, "attempts") and isinstance(exc.attempts, list):
        body["attempts"] = list(exc.attempts)
    return body


@dataclass
class Settings:
    data_dir: str = "datasteer-data"
    provider_mode: str = "scripted"
    fixture_dir: str = ""
    model_name: str = ""
    endpoint: str = ""
    credential_env: str = ""
    kernel_backend: str = "stub"
    kernel_cmd: str = ""
    static_dir: str = ""

    def provider_config(self, mode: str | None = None) -> ProviderConfig:
        chosen = mode or self.provider_mode
        if chosen not in PROVIDER_MODES:
            raise InvalidStrategy(f"provider mode must be one of {PROVIDER_MODES}")
        return ProviderConfig(
            mode=chosen,
            model_name=self.model_name,
            endpoint=self.endpoint,
            credential_ref=self.credential_env,
            fixture_dir=self.fixture_dir,
        )

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(backend=self.kernel_backend, command=self.kernel_cmd)


@dataclass
class SessionHandle:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    flushed: int = 0  # events already written to events.jsonl
    needs_replay: bool = False  # kernel state lost (loaded from disk)


# --- request bodies ---------------------------------------------------------

class CreateSessionBody(BaseModel):
    strategy: str
    provider_mode: str | None = None
    max_subgoals: int = 10


class QueryBody(BaseModel):
    query: str
    dataset_ids: list[str]


class FollowupBody(BaseModel):
    prompt: str


class EditBody(BaseModel):
    content: dict | None = None
    text: str | None = None


class PhaseABody(BaseModel):
    op: str
    column: str | None = None
    index: int | None = None
    assumption: str | None = None
    action: str | None = None


class PlanStepBody(BaseModel):
    index: int
    selected: bool


class SideAskBody(BaseModel):
    node_id: int
    query: str
    selection: list[int] | None = None


class SideGenerateBody(BaseModel):
    node_id: int
    query: str
    selection: list[int] | None = None


class SideQueryBody(BaseModel):
    node_id: int
    query: str


# --- view models ------------------------------------------------------------

def node_view(node) -> dict:
    return {
        "id": node.id,
        "kind": node.kind,
        "parent_id": node.parent_id,
        "children": list(node.children),
        "content": block_to_json(node.content),
        "edit_state": node.edit_state,
        "execution": (
            None if node.execution is None else node.execution.to_json_dict()
        ),
    }


def session_view(session: Session) -> dict:
    graph = session.graph
    view = {
        "id": session.id,
        "strategy": session.strategy,
        "created_at": session.created_at,
        "datasets": [d.to_json_dict() for d in session.datasets.values()],
        "selected": list(session.selected),
        "state": None,
        "branches": [],
        "path": [],
        "pending": [],
        "threads": [t.to_json_dict() for t in session.threads],
        "last_seq": len(session.events),
    }
    if graph is not None:
        view["state"] = engine.strategy_state(session)
        view["branches"] = [
            {
                "id": b.id,
                "label": graph.branch_label(b.id),
                "active": b.id == graph.active_branch,
                "leaf_id": b.leaf_id,
            }
            for b in graph.branches
        ]
        view["path"] = [node_view(n) for n in graph.active_path()]
        view["pending"] = graph.pending_node_ids(graph.active_branch)
    return view


def outcome_view(outcome) -> dict:
    return {
        "node_id": outcome.node_id,
        "new_branch": outcome.new_branch.id if outcome.new_branch else None,
        "invalidated": list(outcome.invalidated),
    }


# --- persistence ------------------------------------------------------------

def session_dir(settings: Settings, session_id: str) -> Path:
    return Path(settings.data_dir) / session_id


def persist(settings: Settings, handle: SessionHandle) -> None:
    """Append unflushed events and rewrite the snapshot. Lock held by caller."""
    sdir = session_dir(settings, handle.session.id)
    sdir.mkdir(parents=True, exist_ok=True)
    events = handle.session.events
    if len(events) > handle.flushed:
        with open(sdir / "events.jsonl", "a", encoding="utf-8") as f:
            for event in events[handle.flushed :]:
                f.write(canonical_json(event.to_json_dict()) + "\n")
        handle.flushed = len(events)
    (sdir / "snapshot.json").write_text(
        canonical_json(export_session(handle.session)), encoding="utf-8"
    )


def load_sessions(settings: Settings) -> dict[str, SessionHandle]:
    """Rebuild every persisted session from its snapshot (or event log)."""
    store: dict[str, SessionHandle] = {}
    root = Path(settings.data_dir)
    if not root.is_dir():
        return store
    for sdir in sorted(p for p in root.iterdir() if p.is_dir()):
        snapshot = sdir / "snapshot.json"
        log = sdir / "events.jsonl"
        try:
            if snapshot.is_file():
                session = import_session(
                    json.loads(snapshot.read_text(encoding="utf-8"))
                )
            elif log.is_file():
                events = [
                    Event.from_json_dict(json.loads(line))
                    for line in log.read_text(encoding="utf-8").splitlines()
                    if line.strip()
                ]
                session = replay_events(events)
            else:
                continue
        except (DatasteerError, ValueError, KeyError) as exc:
            logger.warning("skipping unloadable session dir %s: %s", sdir, exc)
            continue
        store[session.id] = SessionHandle(
            session=session,
            flushed=len(session.events),
            needs_replay=session.graph is not None,
        )
    return store


# --- app factory ------------------------------------------------------------

def create_app(settings: Settings | None = None) -> FastAPI:
    settings = settings or Settings()
    manager = KernelManager(settings.kernel_config())
    store = load_sessions(settings)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="datasteer", lifespan=lifespan)
    app.state.settings = settings
    app.state.store = store
    app.state.manager = manager

    @app.exception_handler(DatasteerError)
    async def domain_error(request: Request, exc: DatasteerError):
        status = _STATUS.get(type(exc), 500)
        return JSONResponse(status_code=status, content=error_body(exc))

    def get_handle(session_id: str) -> SessionHandle:
        handle = store.get(session_id)
        if handle is None:
            raise HTTPException(404, f"no session {session_id}")
        return handle

    def restore_kernel(handle: SessionHandle) -> None:
        """Replay the active branch once after loading from disk. Lock held."""
        if handle.needs_replay and handle.session.graph is not None:
            engine.replay_active_branch(handle.session, manager)
        handle.needs_replay = False

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- session lifecycle ----------------------------------------------

    @app.post("/sessions", status_code=201)
    def create(body: CreateSessionBody):
        session = create_session(
            body.strategy,
            provider=settings.provider_config(body.provider_mode),
            kernel=settings.kernel_config(),
            max_subgoals=body.max_subgoals,
        )
        handle = SessionHandle(session=session)
        store[session.id] = handle
        with handle.lock:
            persist(settings, handle)
        return session_view(session)

    @app.get("/sessions")
    def list_sessions():
        return [
            {
                "id": h.session.id,
                "strategy": h.session.strategy,
                "created_at": h.session.created_at,
            }
            for h in store.values()
        ]

    @app.get("/sessions/{session_id}")
    def view(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            return session_view(handle.session)

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            return export_session(handle.session)

    @app.post("/sessions/import", status_code=201)
    def import_snapshot(snapshot: dict):
        session = import_session(snapshot)
        if session.id in store:
            raise HTTPException(409, f"session {session.id} already loaded")
        handle = SessionHandle(
            session=session,
            needs_replay=session.graph is not None,
        )
        store[session.id] = handle
        with handle.lock:
            persist(settings, handle)
        return session_view(session)

    # -- datasets and task start ----------------------------------------

    @app.post("/sessions/{session_id}/datasets", status_code=201)
    def upload_dataset(session_id: str, file: UploadFile = File(...)):
        handle = get_handle(session_id)
        raw = file.file.read()
        name = file.filename or "upload.csv"
        with handle.lock:
            dataset = add_dataset(handle.session, name, raw)
            raw_dir = session_dir(settings, session_id) / "datasets"
            raw_dir.mkdir(parents=True, exist_ok=True)
            (raw_dir / f"{dataset.id}.csv").write_bytes(raw)
            persist(settings, handle)
        return {
            "dataset": dataset.to_json_dict(),
            "summary": summarize_dataset(dataset),
        }

    @app.post("/sessions/{session_id}/query")
    def submit_query(session_id: str, body: QueryBody):
        handle = get_handle(session_id)
        with handle.lock:
            handle.needs_replay = False  # fresh task builds its own kernel
            created = engine.start_task(
                handle.session, manager, body.query, body.dataset_ids
            )
            persist(settings, handle)
            return {
                "created": [node_view(n) for n in created],
                "view": session_view(handle.session),
            }

    # -- stepping -------------------------------------------------------

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            restore_kernel(handle)
            created = engine.advance(handle.session, manager)
            persist(settings, handle)
            return {
                "created": [node_view(n) for n in created],
                "view": session_view(handle.session),
            }

    @app.post("/sessions/{session_id}/followup")
    def followup(session_id: str, body: FollowupBody):
        handle = get_handle(session_id)
        with handle.lock:
            restore_kernel(handle)
            created = engine.followup(handle.session, manager, body.prompt)
            persist(settings, handle)
            return {
                "created": [node_view(n) for n in created],
                "view": session_view(handle.session),
            }

    # -- edits ----------------------------------------------------------

    @app.post("/sessions/{session_id}/nodes/{node_id}/edit")
    def apply_edit(session_id: str, node_id: int, body: EditBody):
        handle = get_handle(session_id)
        with handle.lock:
            if body.text is not None:
                state = engine.apply_edit_text(handle.session, node_id, body.text)
            elif body.content is not None:
                state = engine.apply_edit(
                    handle.session, node_id, block_from_json(body.content)
                )
            else:
                raise HTTPException(422, "edit needs either content or text")
            persist(settings, handle)
            return {"node_id": node_id, "edit_state": state}

    @app.post("/sessions/{session_id}/nodes/{node_id}/phase-a")
    def phase_a(session_id: str, node_id: int, body: PhaseABody):
        handle = get_handle(session_id)
        with handle.lock:
            state = engine.mutate_phase_a(
                handle.session, node_id, body.model_dump()
            )
            persist(settings, handle)
            return {"node_id": node_id, "edit_state": state}

    @app.post("/sessions/{session_id}/nodes/{node_id}/plan-step")
    def plan_step(session_id: str, node_id: int, body: PlanStepBody):
        handle = get_handle(session_id)
        with handle.lock:
            state = engine.toggle_optional_step(
                handle.session, node_id, body.index, body.selected
            )
            persist(settings, handle)
            return {"node_id": node_id, "edit_state": state}

    @app.post("/sessions/{session_id}/nodes/{node_id}/undo")
    def undo(session_id: str, node_id: int):
        handle = get_handle(session_id)
        with handle.lock:
            state = engine.undo_edit(handle.session, node_id)
            persist(settings, handle)
            return {"node_id": node_id, "edit_state": state}

    def _submit(handle: SessionHandle, node_id: int | None) -> dict:
        restore_kernel(handle)
        outcome = engine.submit_edit(handle.session, node_id)
        report = engine.regenerate_downstream(handle.session, manager, outcome)
        persist(settings, handle)
        return {
            "outcome": outcome_view(outcome),
            "regenerated": [node_view(n) for n in report.nodes],
            "regeneration_error": (
                None if report.error is None else error_body(report.error)
            ),
            "view": session_view(handle.session),
        }

    @app.post("/sessions/{session_id}/nodes/{node_id}/submit")
    def submit_node(session_id: str, node_id: int):
        handle = get_handle(session_id)
        with handle.lock:
            return _submit(handle, node_id)

    @app.post("/sessions/{session_id}/submit")
    def submit_highest(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            return _submit(handle, None)

    # -- branches -------------------------------------------------------

    @app.post("/sessions/{session_id}/branches/{branch_id}/switch")
    def switch(session_id: str, branch_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            handle.needs_replay = False  # switching replays on its own
            replayed = engine.switch_branch(handle.session, manager, branch_id)
            persist(settings, handle)
            return {
                "replayed": [n.id for n in replayed],
                "view": session_view(handle.session),
            }

    # -- variables ------------------------------------------------------

    @app.get("/sessions/{session_id}/variables")
    def variables(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            restore_kernel(handle)
            session = handle.session
            if session.graph is None:
                return {"variables": []}
            snaps = manager.list_variables(session.id, session.graph.active().id)
            return {"variables": [s.to_json_dict() for s in snaps]}

    @app.get("/sessions/{session_id}/variables/{name}")
    def variable_page(
        session_id: str,
        name: str,
        filter: str = "",
        page: int = 0,
        page_size: int = 50,
    ):
        handle = get_handle(session_id)
        with handle.lock:
            restore_kernel(handle)
            session = handle.session
            if session.graph is None:
                raise UnknownVariable(name)
            page_data = manager.fetch_variable(
                session.id,
                session.graph.active().id,
                name,
                filter=filter,
                page=page,
                page_size=page_size,
            )
            return page_data.to_json_dict()

    @app.post("/sessions/{session_id}/interrupt")
    def interrupt(session_id: str):
        handle = get_handle(session_id)
        session = handle.session
        if session.graph is None:
            raise HTTPException(409, "no task running")
        # deliberately lock-free: interrupt must reach a busy kernel
        manager.interrupt(session.id, session.graph.active().id)
        return {"status": "interrupt-sent"}

    # -- side conversations ---------------------------------------------

    def _selection(raw: list[int] | None) -> tuple[int, int] | None:
        if raw is None:
            return None
        if len(raw) != 2:
            raise InvalidSelection("selection must be a [start, end) pair")
        return (raw[0], raw[1])

    @app.post("/sessions/{session_id}/side/ask", status_code=201)
    def side_ask(session_id: str, body: SideAskBody):
        handle = get_handle(session_id)
        with handle.lock:
            thread = side.ask_question(
                handle.session, body.node_id, body.query, _selection(body.selection)
            )
            persist(settings, handle)
            return thread.to_json_dict()

    @app.post("/sessions/{session_id}/side/generate", status_code=201)
    def side_generate(session_id: str, body: SideGenerateBody):
        handle = get_handle(session_id)
        with handle.lock:
            thread = side.generate_code(
                handle.session, body.node_id, body.query, _selection(body.selection)
            )
            persist(settings, handle)
            return thread.to_json_dict()

    @app.post("/sessions/{session_id}/side/query", status_code=201)
    def side_query(session_id: str, body: SideQueryBody):
        handle = get_handle(session_id)
        with handle.lock:
            restore_kernel(handle)
            thread = side.run_side_query(
                handle.session, manager, body.node_id, body.query
            )
            persist(settings, handle)
            return thread.to_json_dict()

    def get_thread(handle: SessionHandle, thread_id: str):
        for thread in handle.session.threads:
            if thread.id == thread_id:
                return thread
        raise HTTPException(404, f"no thread {thread_id}")

    @app.post("/sessions/{session_id}/threads/{thread_id}/insert")
    def thread_insert(session_id: str, thread_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            thread = get_thread(handle, thread_id)
            state = side.insert_snippet(handle.session, thread.id)
            persist(settings, handle)
            return {"node_id": thread.node_id, "edit_state": state}

    @app.post("/sessions/{session_id}/threads/{thread_id}/discard")
    def thread_discard(session_id: str, thread_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            thread = get_thread(handle, thread_id)
            side.discard_thread(handle.session, thread.id)
            persist(settings, handle)
            return thread.to_json_dict()

    # -- event stream ---------------------------------------------------

    @app.get("/sessions/{session_id}/events")
    async def events(
        session_id: str,
        request: Request,
        after: int | None = None,
        limit: int | None = None,
    ):
        """Replay events past `after` (or Last-Event-ID), then follow live.

        With `limit` the stream closes after that many events, which turns
        it into a bounded replay a plain HTTP client can consume.
        """
        handle = get_handle(session_id)
        if after is None:
            last_id = request.headers.get("last-event-id", "")
            after = int(last_id) if last_id.isdigit() else 0
        start = after

        async def stream():
            sent = start
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                log = handle.session.events
                if len(log) > sent:
                    for event in log[sent:]:
                        payload = canonical_json(event.to_json_dict())
                        yield f"id: {event.seq}\nevent: {event.kind}\ndata: {payload}\n\n"
                        sent = event.seq
                        if limit is not None and sent - start >= limit:
                            return
                    idle = 0.0
                else:
                    await asyncio.sleep(0.15)
                    idle += 0.15
                    if idle >= 15.0:
                        yield ": keepalive\n\n"
                        idle = 0.0

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- static client --------------------------------------------------

    static_dir = settings.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


# --- CLI --------------------------------------------------------------------

def build_settings(args: argparse.Namespace) -> Settings:
    backend = "sidecar" if (args.kernel_cmd and not args.stub_kernel) else "stub"
    return Settings(
        data_dir=args.data_dir,
        provider_mode=args.provider,
        fixture_dir=args.fixtures or "",
        model_name=args.model,
        endpoint=args.endpoint,
        credential_env=args.credential_env,
        kernel_backend=backend,
        kernel_cmd=args.kernel_cmd or "",
        static_dir=args.static or "",
    )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datasteer-server",
        description="Interactive task-decomposition service for data analysis.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument(
        "--data-dir", default="datasteer-data",
        help="root directory for per-session persistence",
    )
    parser.add_argument(
        "--provider", choices=PROVIDER_MODES, default="scripted",
        help="default provider mode for new sessions",
    )
    parser.add_argument(
        "--fixtures", default="",
        help="fixture directory for scripted provider mode",
    )
    parser.add_argument(
        "--kernel-cmd", default="",
        help="command launching a kernel sidecar speaking the wire protocol",
    )
    parser.add_argument(
        "--stub-kernel", action="store_true",
        help="force the in-process stub kernel even when --kernel-cmd is set",
    )
    parser.add_argument("--model", default="", help="live provider model name")
    parser.add_argument("--endpoint", default="", help="live provider endpoint URL")
    parser.add_argument(
        "--credential-env", default="",
        help="name of the environment variable holding the provider credential",
    )
    parser.add_argument(
        "--static", default="",
        help="directory with the built web client, served at /",
    )
    return parser


def main(argv: list[str] | None = None) -> None:
    args = make_parser().parse_args(argv)
    if args.provider == "live" and args.credential_env:
        if not os.environ.get(args.credential_env):
            raise SystemExit(
                f"live mode: environment variable {args.credential_env} is empty"
            )
    import uvicorn

    uvicorn.run(create_app(build_settings(args)), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
