"""Side conversations: questions, snippet generation, and side queries.

Threads anchor to a component node (optionally to a character span of its
code) and live beside the main thread: nothing here enters any prompt
context or, except for an explicit snippet insertion, changes the graph.
Side queries run on the shared branch kernel so they see current
variables; a before/after snapshot diff flags any state they mutate,
which is the enforcement behind the read-only instruction in the prompt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .blocks import AnswerText, CodeBlock, block_from_json, block_to_json
from .errors import (
    AnchorNodeGone,
    InvalidSelection,
    SchemaViolation,
    SelectionRequired,
    ThreadNotAnswered,
    WrongStrategy,
)
from .execution import ExecutionResult, KernelManager, VariableSnapshot
from .graph import NODE_COLUMN_ASSUMPTIONS, ComponentNode
from .repair import repair_loop
from .session import Session
from .templates import SIDE_QUERY, SIDE_QUESTION

KIND_ASK = "ask_question"
KIND_GENERATE = "generate_code"
KIND_SIDE_QUERY = "side_query"
THREAD_KINDS = (KIND_ASK, KIND_GENERATE, KIND_SIDE_QUERY)

STATUS_OPEN = "open"
STATUS_ANSWERED = "answered"
STATUS_INSERTED = "inserted"
STATUS_DISCARDED = "discarded"


@dataclass
class SideThread:
    id: str
    node_id: int
    kind: str
    query: str
    selection: tuple[int, int] | None = None
    status: str = STATUS_OPEN
    stale: bool = False
    response: AnswerText | CodeBlock | None = None
    execution: ExecutionResult | None = None
    mutation_warning: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "node_id": self.node_id,
            "kind": self.kind,
            "query": self.query,
            "selection": None if self.selection is None else list(self.selection),
            "status": self.status,
            "stale": self.stale,
            "response": None if self.response is None else block_to_json(self.response),
            "execution": (
                None if self.execution is None else self.execution.to_json_dict()
            ),
            "mutation_warning": list(self.mutation_warning),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SideThread":
        return cls(
            id=d["id"],
            node_id=d["node_id"],
            kind=d["kind"],
            query=d["query"],
            selection=None if d["selection"] is None else tuple(d["selection"]),
            status=d["status"],
            stale=d["stale"],
            response=None if d["response"] is None else block_from_json(d["response"]),
            execution=(
                None
                if d["execution"] is None
                else ExecutionResult.from_json_dict(d["execution"])
            ),
            mutation_warning=list(d["mutation_warning"]),
        )

    def apply_update(self, payload: dict) -> None:
        if "status" in payload:
            self.status = payload["status"]
        if "stale" in payload:
            self.stale = payload["stale"]


# --- anchoring --------------------------------------------------------------

def _anchor_node(session: Session, node_id: int) -> ComponentNode:
    if session.graph is None:
        raise SchemaViolation("no task started")
    return session.graph.node(node_id)


def _anchored_code(node: ComponentNode) -> str | None:
    from .engine import _node_code

    return _node_code(node)


def _check_selection(code: str | None, selection: tuple[int, int] | None) -> None:
    if selection is None:
        return
    if code is None:
        raise InvalidSelection("selection requires a code-bearing node")
    start, end = selection
    if not (0 <= start <= end <= len(code)):
        raise InvalidSelection(
            f"selection [{start}, {end}) outside code of length {len(code)}"
        )


def _anchor_context(node: ComponentNode, selection: tuple[int, int] | None) -> str:
    """What the model sees about the anchor: content, plus the exact span."""
    from .blocks import context_text

    parts = [context_text(node.content)]
    code = _anchored_code(node)
    if node.execution is not None and node.execution.error is not None:
        err = node.execution.error
        parts.append(
            "This code failed with:\n"
            + str(err.get("traceback") or err.get("message") or err)
        )
    if selection is not None and code is not None:
        start, end = selection
        parts.append(f"The user highlighted this part:\n{code[start:end]}")
    return "\n\n".join(parts)


def _open_thread(
    session: Session,
    thread: SideThread,
    messages: tuple,
) -> SideThread:
    payload = {
        "thread": thread.to_json_dict(),
        # rendered prompt, kept for traceability; the fold ignores it
        "messages": [[role, text] for role, text in messages],
    }
    return session.record("thread_opened", payload)


def _next_thread_id(session: Session) -> str:
    return f"t{len(session.threads) + 1}"


# --- operations -------------------------------------------------------------

def ask_question(
    session: Session,
    node_id: int,
    query: str,
    selection: tuple[int, int] | None = None,
) -> SideThread:
    """Explain the anchored code (or a highlighted span of it)."""
    node = _anchor_node(session, node_id)
    _check_selection(_anchored_code(node), selection)
    if not query or not query.strip():
        raise SchemaViolation("question must be non-empty")
    context = {
        "query": _root_query(session),
        "datasets": _summary(session),
        "context": _anchor_context(node, selection),
        "question": query.strip(),
    }
    outcome = repair_loop(SIDE_QUESTION, context, session.provider)
    thread = SideThread(
        id=_next_thread_id(session),
        node_id=node_id,
        kind=KIND_ASK,
        query=query.strip(),
        selection=selection,
        status=STATUS_ANSWERED,
        response=outcome.block,
    )
    return _open_thread(session, thread, outcome.messages)


def generate_code(
    session: Session,
    node_id: int,
    query: str,
    selection: tuple[int, int],
) -> SideThread:
    """Produce a replacement snippet for the selected code span."""
    node = _anchor_node(session, node_id)
    if selection is None:
        raise SelectionRequired("generate_code needs a selected code span")
    code = _anchored_code(node)
    if code is None:
        raise SelectionRequired("generate_code anchors to code-bearing nodes")
    _check_selection(code, selection)
    if not query or not query.strip():
        raise SchemaViolation("instruction must be non-empty")
    start, end = selection
    context = {
        "query": _root_query(session),
        "datasets": _summary(session),
        "context": _anchor_context(node, selection),
        "question": (
            f"Rewrite only this selected part:\n{code[start:end]}\n\n"
            f"Instruction: {query.strip()}"
        ),
    }
    outcome = repair_loop(SIDE_QUERY, context, session.provider)
    thread = SideThread(
        id=_next_thread_id(session),
        node_id=node_id,
        kind=KIND_GENERATE,
        query=query.strip(),
        selection=selection,
        status=STATUS_ANSWERED,
        response=outcome.block,
    )
    return _open_thread(session, thread, outcome.messages)


def insert_snippet(session: Session, thread_id: str) -> str:
    """Splice an answered snippet over its anchored selection.

    The splice is exact: code[0:start] + snippet + code[end:]. It stages a
    normal pending edit on the anchor node, so undo and submit behave as
    for any hand edit.
    """
    thread = session.thread(thread_id)
    if thread.kind != KIND_GENERATE:
        raise SchemaViolation("only generate_code threads insert snippets")
    if thread.status != STATUS_ANSWERED:
        raise ThreadNotAnswered(f"thread {thread_id} is {thread.status}")
    node = _anchor_node(session, thread.node_id)
    active_ids = {n.id for n in session.graph.active_path()}
    if thread.stale or node.id not in active_ids:
        raise AnchorNodeGone(f"node {thread.node_id} left the active branch")
    code = _anchored_code(node)
    if code is None:
        raise AnchorNodeGone(f"node {thread.node_id} no longer carries code")
    start, end = thread.selection
    spliced = code[:start] + thread.response.code + code[end:]
    new_content = CodeBlock(code=spliced, language_tag=node.content.language_tag)
    state = session.record(
        "edit_applied",
        {"node_id": node.id, "content": block_to_json(new_content)},
    )
    session.record(
        "thread_updated", {"thread_id": thread_id, "status": STATUS_INSERTED}
    )
    return state


def run_side_query(
    session: Session,
    manager: KernelManager,
    node_id: int,
    query: str,
) -> SideThread:
    """Answer an ancillary data question with generated, executed code.

    Runs on the active branch's kernel so current variables are visible.
    Execution errors land in the thread, never in the main graph; any
    variable the code changed or created is listed in mutation_warning.
    """
    if session.strategy == "conversational":
        raise WrongStrategy("side queries are not part of the chat baseline")
    node = _anchor_node(session, node_id)
    code = _anchored_code(node)
    if code is None and node.kind != NODE_COLUMN_ASSUMPTIONS:
        raise InvalidSelection(
            "side queries anchor to code nodes or the column-assumptions step"
        )
    if not query or not query.strip():
        raise SchemaViolation("query must be non-empty")

    from .engine import _ensure_kernel

    _ensure_kernel(session, manager)
    branch_id = session.graph.active().id
    before = {v.name: v for v in manager.list_variables(session.id, branch_id)}
    names = ", ".join(before) if before else "(none)"

    context = {
        "query": _root_query(session),
        "datasets": _summary(session),
        "context": (
            f"Variables currently defined: {names}\n\n"
            + _anchor_context(node, None)
        ),
        "question": query.strip(),
    }
    outcome = repair_loop(SIDE_QUERY, context, session.provider)
    result = manager.execute(session.id, branch_id, outcome.block.code)
    after = {v.name: v for v in result.variables}
    warned = sorted(
        name
        for name, snap in after.items()
        if name not in before or not _same_snapshot(before[name], snap)
    )
    thread = SideThread(
        id=_next_thread_id(session),
        node_id=node_id,
        kind=KIND_SIDE_QUERY,
        query=query.strip(),
        status=STATUS_ANSWERED,
        response=outcome.block,
        execution=result,
        mutation_warning=warned,
    )
    return _open_thread(session, thread, outcome.messages)


def discard_thread(session: Session, thread_id: str) -> SideThread:
    session.thread(thread_id)  # existence check before logging
    return session.record(
        "thread_updated", {"thread_id": thread_id, "status": STATUS_DISCARDED}
    )


def refresh_staleness(session: Session) -> list[str]:
    """Mark threads whose anchor fell off the active path; returns their ids."""
    if session.graph is None:
        return []
    active_ids = {n.id for n in session.graph.active_path()}
    changed = []
    for thread in session.threads:
        now_stale = thread.node_id not in active_ids
        if now_stale != thread.stale:
            session.record(
                "thread_updated", {"thread_id": thread.id, "stale": now_stale}
            )
            changed.append(thread.id)
    return changed


def _same_snapshot(a: VariableSnapshot, b: VariableSnapshot) -> bool:
    return (
        a.kind == b.kind
        and a.type_label == b.type_label
        and a.shape == b.shape
        and a.preview == b.preview
    )


def _root_query(session: Session) -> str:
    from .engine import _root_query as impl

    return impl(session)


def _summary(session: Session) -> str:
    from .profiling import summarize_for_llm

    return summarize_for_llm(session.datasets, session.selected)


__all__ = [
    "KIND_ASK",
    "KIND_GENERATE",
    "KIND_SIDE_QUERY",
    "STATUS_ANSWERED",
    "STATUS_DISCARDED",
    "STATUS_INSERTED",
    "STATUS_OPEN",
    "SideThread",
    "ask_question",
    "discard_thread",
    "generate_code",
    "insert_snippet",
    "refresh_staleness",
    "run_side_query",
]
