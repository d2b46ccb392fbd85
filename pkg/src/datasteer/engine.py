"""Decomposition engine: the three strategy flows over one session graph.

Strategy state is derived from the active branch path, never stored: the
leaf node's kind decides what ``advance`` produces next. That makes the
same dispatch serve first generation, continuation, and regeneration after
a branching edit (a fresh branch simply has an earlier leaf).

All graph mutations go through ``session.record`` so the event log carries
generated content and execution results; see the session module.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .blocks import (
    AnswerText,
    AssumptionItem,
    CodeBlock,
    ColumnAssumptions,
    CompletionSignal,
    PlanStep,
    PlanSteps,
    TaskSpec,
    block_to_json,
    context_text,
)
from .errors import (
    DatasteerError,
    InvalidStrategy,
    MaxSubgoalsExceeded,
    NotOptional,
    NothingPending,
    ParseError,
    PendingEditsExist,
    RejectedColumns,
    SchemaViolation,
    SelectionRequired,
    UnknownColumn,
    UnknownDataset,
    UnparseableAfterRetries,
    WrongStrategy,
)
from .execution import ExecutionResult, KernelManager, LoadedDataset, sanitize_binding
from .graph import (
    NODE_CODE,
    NODE_COLUMN_ASSUMPTIONS,
    NODE_CONVERSATION_TURN,
    NODE_INPUT_QUERY,
    NODE_PLAN,
    NODE_SUBGOAL_ASSUMPTIONS,
    NODE_SUBGOAL_CODE,
    ComponentNode,
    SubmitOutcome,
)
from .parsing import extract_code, parse_block
from .profiling import summarize_for_llm
from .provider import request_hash
from .repair import RepairOutcome, repair_loop
from .session import Session
from .templates import (
    CONVERSATION_TURN,
    PHASE_A_COLUMNS,
    PHASE_B_PLAN,
    PHASE_C_CODE,
    SUBGOAL_ASSUMPTIONS,
    SUBGOAL_CODE,
    PromptTemplate,
)

logger = logging.getLogger("datasteer.engine")

STRATEGY_CONVERSATIONAL = "conversational"
STRATEGY_STEPWISE = "stepwise"
STRATEGY_PHASEWISE = "phasewise"

# node kind -> block kind expected when a raw-text edit is parsed
EDITABLE_BLOCK_KINDS = {
    NODE_COLUMN_ASSUMPTIONS: "column_assumptions",
    NODE_PLAN: "plan_steps",
    NODE_CODE: "code",
    NODE_SUBGOAL_CODE: "code",
    NODE_SUBGOAL_ASSUMPTIONS: "assumption_list",
}


@dataclass
class RegenerationOutcome:
    """What a regeneration pass produced before finishing or halting."""

    nodes: list[ComponentNode] = field(default_factory=list)
    error: DatasteerError | None = None

    @property
    def halted(self) -> bool:
        return self.error is not None


# --- shared context assembly ------------------------------------------------

def loaded_datasets(session: Session) -> list[LoadedDataset]:
    out = []
    for ds_id in session.selected:
        dataset = session.datasets[ds_id]
        columns, rows = session.dataset_tables[ds_id]
        out.append(
            LoadedDataset(
                binding=sanitize_binding(dataset.name),
                name=dataset.name,
                columns=tuple(columns),
                rows=tuple(tuple(r) for r in rows),
            )
        )
    return out


def known_columns(session: Session) -> set[str]:
    names: set[str] = set()
    for ds_id in session.selected:
        names.update(session.datasets[ds_id].column_names())
    return names


def _root_query(session: Session) -> str:
    root = session.graph.active_path()[0]
    if isinstance(root.content, TaskSpec):
        return root.content.query
    return context_text(root.content)


def _dataset_summary(session: Session) -> str:
    return summarize_for_llm(session.datasets, session.selected)


def _context(session: Session) -> str:
    """Serialized content of every node after the root on the active path.

    Only node content enters prompts: execution outputs stay out, and a
    plan contributes its selected steps only (see blocks.context_text).
    """
    path = session.graph.active_path()
    return "\n\n".join(context_text(node.content) for node in path[1:])


def _base_context(session: Session) -> dict[str, str]:
    return {
        "query": _root_query(session),
        "datasets": _dataset_summary(session),
        "context": _context(session),
    }


def _ensure_kernel(session: Session, manager: KernelManager) -> None:
    manager.start_kernel(session.id, session.graph.active().id, loaded_datasets(session))


# --- generation plumbing ----------------------------------------------------

def _generate_node(
    session: Session,
    template: PromptTemplate,
    context: dict[str, str],
    node_kind: str,
    columns: set[str] | None = None,
) -> ComponentNode:
    outcome: RepairOutcome = repair_loop(
        template, context, session.provider, known_columns=columns
    )
    branch = session.graph.active()
    payload = {
        "branch_id": branch.id,
        "kind": node_kind,
        "content": block_to_json(outcome.block),
        "node_id": session.graph.next_node_id,
        "template_id": template.id,
        "request_hash": request_hash(list(outcome.messages)),
        "attempts": outcome.attempts,
        "messages": [[role, text] for role, text in outcome.messages],
    }
    return session.record("node_generated", payload)


def _append_plain(session: Session, node_kind: str, content) -> ComponentNode:
    branch = session.graph.active()
    payload = {
        "branch_id": branch.id,
        "kind": node_kind,
        "content": block_to_json(content),
        "node_id": session.graph.next_node_id,
    }
    return session.record("node_appended", payload)


def _attach_execution(
    session: Session, node: ComponentNode, result: ExecutionResult | None
) -> None:
    session.record(
        "execution_attached",
        {"node_id": node.id, "result": None if result is None else result.to_json_dict()},
    )


def _execute_node(
    session: Session, manager: KernelManager, node: ComponentNode, code: str
) -> ExecutionResult:
    _ensure_kernel(session, manager)
    result = manager.execute(session.id, session.graph.active().id, code)
    _attach_execution(session, node, result)
    return result


def _node_code(node: ComponentNode) -> str | None:
    """The executable code a node carries, if any."""
    if isinstance(node.content, CodeBlock):
        return node.content.code
    if node.kind == NODE_CONVERSATION_TURN and isinstance(node.content, AnswerText):
        block = extract_code(node.content.text)
        return block.code if block is not None else None
    return None


def replay_active_branch(session: Session, manager: KernelManager) -> list[ComponentNode]:
    """Fresh kernel for the active branch, re-running its code nodes in order.

    Nodes past the first error (or past a dead kernel) are marked
    unexecuted. Returns the code-bearing nodes that were considered.
    """
    path = session.graph.active_path()
    code_nodes = [(n, _node_code(n)) for n in path]
    code_nodes = [(n, c) for n, c in code_nodes if c is not None]
    results = manager.replay_branch(
        session.id,
        session.graph.active().id,
        loaded_datasets(session),
        [c for _, c in code_nodes],
    )
    for i, (node, _) in enumerate(code_nodes):
        _attach_execution(session, node, results[i] if i < len(results) else None)
    return [n for n, _ in code_nodes]


# --- strategy state ---------------------------------------------------------

def strategy_state(session: Session) -> dict:
    """Derived view of where the active branch stands."""
    if session.graph is None:
        return {"strategy": session.strategy, "started": False}
    path = session.graph.active_path()
    leaf = path[-1]
    state: dict = {"strategy": session.strategy, "started": True}
    if session.strategy == STRATEGY_PHASEWISE:
        if leaf.kind == NODE_COLUMN_ASSUMPTIONS:
            phase = "A_assumptions"
        elif leaf.kind == NODE_PLAN:
            phase = "B_plan"
        elif leaf.kind == NODE_CODE:
            phase = "C_code" if leaf.execution is None else "done"
        else:
            phase = "A_assumptions"
        state["phase"] = phase
        state["completed"] = phase == "done"
    elif session.strategy == STRATEGY_STEPWISE:
        sa_nodes = [n for n in path if n.kind == NODE_SUBGOAL_ASSUMPTIONS]
        state["subgoal_index"] = len(sa_nodes)
        state["max_subgoals"] = session.max_subgoals
        state["completed"] = any(
            isinstance(n.content, CompletionSignal) for n in sa_nodes
        )
    else:
        state["turn_count"] = len(path) - 1
        state["completed"] = False
    return state


# --- task start -------------------------------------------------------------

def start_task(
    session: Session,
    manager: KernelManager,
    query: str,
    dataset_ids: list[str],
) -> list[ComponentNode]:
    """Create the root and the strategy's first components."""
    if session.graph is not None:
        raise SchemaViolation("task already started for this session")
    if session.strategy not in (
        STRATEGY_CONVERSATIONAL,
        STRATEGY_STEPWISE,
        STRATEGY_PHASEWISE,
    ):
        raise InvalidStrategy(f"unknown strategy {session.strategy!r}")
    if not query or not query.strip():
        raise SchemaViolation("task query must be non-empty")
    if not dataset_ids:
        raise SelectionRequired("select at least one dataset")
    for ds_id in dataset_ids:
        if ds_id not in session.datasets:
            raise UnknownDataset(ds_id)

    task = TaskSpec(
        query=query.strip(),
        dataset_ids=tuple(dataset_ids),
        strategy=session.strategy,
    )
    session.record("task_started", {"task": block_to_json(task)})
    _ensure_kernel(session, manager)
    return _advance_once(session, manager)


# --- advance ----------------------------------------------------------------

def advance(session: Session, manager: KernelManager) -> list[ComponentNode]:
    """Generate the next component(s) for the active branch.

    Refuses while any node on the active path holds a pending edit; those
    must be submitted or undone first so prompts never see limbo content.
    """
    if session.graph is None:
        raise SchemaViolation("no task started")
    pending = session.graph.pending_node_ids(session.graph.active().id)
    if pending:
        raise PendingEditsExist(pending)
    return _advance_once(session, manager)


def _advance_once(session: Session, manager: KernelManager) -> list[ComponentNode]:
    leaf = session.graph.active_path()[-1]
    strategy = session.strategy

    if strategy == STRATEGY_CONVERSATIONAL:
        if leaf.kind == NODE_INPUT_QUERY:
            return [_conversation_reply(session, manager)]
        return []  # chat turns advance only via followup

    if strategy == STRATEGY_PHASEWISE:
        if leaf.kind == NODE_INPUT_QUERY:
            try:
                node = _generate_node(
                    session,
                    PHASE_A_COLUMNS,
                    {
                        "query": _root_query(session),
                        "datasets": _dataset_summary(session),
                    },
                    NODE_COLUMN_ASSUMPTIONS,
                    columns=known_columns(session),
                )
            except UnparseableAfterRetries as exc:
                _raise_for_rejected_columns(exc)
            return [node]
        if leaf.kind == NODE_COLUMN_ASSUMPTIONS:
            return [
                _generate_node(
                    session, PHASE_B_PLAN, _base_context(session), NODE_PLAN
                )
            ]
        if leaf.kind == NODE_PLAN:
            node = _generate_node(
                session, PHASE_C_CODE, _base_context(session), NODE_CODE
            )
            _execute_node(session, manager, node, node.content.code)
            return [node]
        return []  # code emitted and executed: done

    # stepwise
    if leaf.kind == NODE_INPUT_QUERY:
        loading = _append_plain(session, NODE_SUBGOAL_CODE, _loading_block(session))
        _execute_node(session, manager, loading, loading.content.code)
        sa = _next_subgoal_assumptions(session)
        return [loading, sa]
    if leaf.kind == NODE_SUBGOAL_CODE:
        return [_next_subgoal_assumptions(session)]
    if leaf.kind == NODE_SUBGOAL_ASSUMPTIONS:
        if isinstance(leaf.content, CompletionSignal):
            return []  # terminal; edit the node to resume
        context = dict(_base_context(session))
        context["subgoal"] = context_text(leaf.content)
        code_node = _generate_node(session, SUBGOAL_CODE, context, NODE_SUBGOAL_CODE)
        _execute_node(session, manager, code_node, code_node.content.code)
        sa = _next_subgoal_assumptions(session)
        return [code_node, sa]
    raise SchemaViolation(f"stepwise cannot advance from a {leaf.kind} leaf")


def _loading_block(session: Session) -> CodeBlock:
    """The fixed dataset-loading step that opens every stepwise session.

    The kernel preloads the bindings when it starts, so the code itself is
    documentation: one comment per dataset naming its binding.
    """
    lines = ["# Datasets are loaded into these variables:"]
    for ds in loaded_datasets(session):
        lines.append(f"# {ds.binding}: {ds.name} ({len(ds.rows)} rows)")
    return CodeBlock(code="\n".join(lines), language_tag="python")


def _next_subgoal_assumptions(session: Session) -> ComponentNode:
    done = sum(
        1
        for n in session.graph.active_path()
        if n.kind == NODE_SUBGOAL_ASSUMPTIONS
    )
    if done + 1 > session.max_subgoals:
        raise MaxSubgoalsExceeded(
            f"subgoal limit {session.max_subgoals} reached without completion"
        )
    return _generate_node(
        session, SUBGOAL_ASSUMPTIONS, _base_context(session), NODE_SUBGOAL_ASSUMPTIONS
    )


def _conversation_reply(session: Session, manager: KernelManager) -> ComponentNode:
    node = _generate_node(
        session, CONVERSATION_TURN, _base_context(session), NODE_CONVERSATION_TURN
    )
    code = _node_code(node)
    if code is not None:
        _execute_node(session, manager, node, code)
    return node


# --- conversational follow-up ----------------------------------------------

def followup(
    session: Session, manager: KernelManager, prompt: str
) -> list[ComponentNode]:
    if session.strategy != STRATEGY_CONVERSATIONAL:
        raise WrongStrategy("follow-up prompts exist only in conversational mode")
    if session.graph is None:
        raise SchemaViolation("no task started")
    if not prompt or not prompt.strip():
        raise SchemaViolation("follow-up prompt must be non-empty")
    pending = session.graph.pending_node_ids(session.graph.active().id)
    if pending:
        raise PendingEditsExist(pending)
    user_node = _append_plain(session, NODE_INPUT_QUERY, AnswerText(prompt.strip()))
    reply = _conversation_reply(session, manager)
    return [user_node, reply]


# --- edits ------------------------------------------------------------------

def apply_edit(session: Session, node_id: int, content) -> str:
    """Stage new content on a node; returns the resulting edit state."""
    if session.graph is None:
        raise SchemaViolation("no task started")
    return session.record(
        "edit_applied", {"node_id": node_id, "content": block_to_json(content)}
    )


def apply_edit_text(session: Session, node_id: int, raw: str) -> str:
    """Parse a raw edit per the node's grammar, then stage it."""
    if session.graph is None:
        raise SchemaViolation("no task started")
    node = session.graph.node(node_id)
    if node.kind == NODE_INPUT_QUERY:
        if isinstance(node.baseline(), TaskSpec):
            base = node.baseline()
            if not raw.strip():
                raise SchemaViolation("task query must be non-empty")
            content = TaskSpec(
                query=raw.strip(),
                dataset_ids=base.dataset_ids,
                strategy=base.strategy,
            )
        else:
            content = AnswerText(raw.strip())
    else:
        expected = EDITABLE_BLOCK_KINDS.get(node.kind)
        if expected is None:
            # let the graph raise its own NotEditable for conversation turns
            content = AnswerText(raw)
        else:
            columns = (
                known_columns(session)
                if expected == "column_assumptions"
                else None
            )
            content = parse_block(raw, expected, known_columns=columns)
    return apply_edit(session, node_id, content)


def undo_edit(session: Session, node_id: int) -> None:
    if session.graph is None:
        raise SchemaViolation("no task started")
    session.record("edit_undone", {"node_id": node_id})


def submit_edit(session: Session, node_id: int | None = None) -> SubmitOutcome:
    """Commit a pending edit; without a node id, commit the highest one.

    When several nodes on the active path are pending, the edit closest to
    the root wins the branching event: nodes below it are invalidated, and
    their pending state stays behind on the original branch.
    """
    if session.graph is None:
        raise SchemaViolation("no task started")
    if node_id is None:
        pending = session.graph.pending_node_ids(session.graph.active().id)
        if not pending:
            raise NothingPending("no pending edits on the active branch")
        path_ids = [n.id for n in session.graph.active_path()]
        node_id = min(pending, key=path_ids.index)
    outcome = session.record("edit_submitted", {"node_id": node_id})
    # enrich the logged payload with what the submit produced
    self_event = session.events[-1]
    self_event.payload["outcome"] = {
        "node_id": outcome.node_id,
        "new_branch": outcome.new_branch.id if outcome.new_branch else None,
        "invalidated": list(outcome.invalidated),
    }
    return outcome


# --- regeneration -----------------------------------------------------------

def regenerate_downstream(
    session: Session, manager: KernelManager, outcome: SubmitOutcome
) -> RegenerationOutcome:
    """Rebuild what a submitted edit invalidated, on the new active branch.

    Components regenerate in path order through the same dispatch advance
    uses, so each prompt sees the edited upstream content. Stops early on
    a stepwise completion signal, and halts at the first provider, parse,
    or kernel failure, keeping the nodes generated so far. A leaf code
    edit invalidates nothing and only re-executes the branch.

    Conversational sessions regenerate a single reply: turns after the
    edited prompt reflected answers that no longer exist, so they stay on
    the original branch only.
    """
    if session.graph is None:
        raise SchemaViolation("no task started")
    report = RegenerationOutcome()

    submitted = session.graph.node(outcome.node_id)
    code_changed = _node_code(submitted) is not None
    if outcome.new_branch is None and not outcome.invalidated:
        if code_changed:
            try:
                replay_active_branch(session, manager)
            except DatasteerError as exc:
                report.error = exc
        return report

    try:
        replay_active_branch(session, manager)
    except DatasteerError as exc:
        report.error = exc
        return report

    if session.strategy == STRATEGY_CONVERSATIONAL:
        target = 1
    else:
        target = len(outcome.invalidated)
    while len(report.nodes) < target:
        if strategy_state(session).get("completed"):
            break
        try:
            created = _advance_once(session, manager)
        except DatasteerError as exc:
            report.error = exc
            logger.warning("regeneration halted: %s", exc)
            break
        if not created:
            break
        report.nodes.extend(created)
    return report


# --- phase-A mutations ------------------------------------------------------

def mutate_phase_a(session: Session, node_id: int, action: dict) -> str:
    """Apply one structured mutation to a column-assumptions node.

    Actions: add_column, remove_column, add_assumption, edit_assumption,
    remove_assumption (column omitted or null targets the output list).
    Mutations stack on the node's current working content and stage a
    pending edit like any other.
    """
    if session.graph is None:
        raise SchemaViolation("no task started")
    node = session.graph.node(node_id)
    if node.kind != NODE_COLUMN_ASSUMPTIONS:
        raise SchemaViolation(f"node {node_id} holds no column assumptions")
    current: ColumnAssumptions = node.content
    per_column = {name: list(items) for name, items in current.per_column.items()}
    output = list(current.output_assumptions)

    op = action.get("op")
    column = action.get("column")

    def _target_list() -> list[AssumptionItem]:
        if column is None:
            return output
        if column not in per_column:
            raise UnknownColumn(f"column `{column}` is not selected")
        return per_column[column]

    if op == "add_column":
        if column not in known_columns(session):
            raise UnknownColumn(f"column `{column}` not present in the dataset")
        if column in per_column:
            raise SchemaViolation(f"column `{column}` already selected")
        per_column[column] = []
    elif op == "remove_column":
        if column not in per_column:
            raise UnknownColumn(f"column `{column}` is not selected")
        del per_column[column]
    elif op == "add_assumption":
        _target_list().append(_item_from_action(action))
    elif op == "edit_assumption":
        items = _target_list()
        idx = _index_in(action, items)
        items[idx] = _item_from_action(action)
    elif op == "remove_assumption":
        items = _target_list()
        del items[_index_in(action, items)]
    else:
        raise SchemaViolation(f"unknown phase-A mutation {op!r}")

    new_content = ColumnAssumptions(
        per_column={k: list(v) for k, v in per_column.items()},
        output_assumptions=output,
    )
    return apply_edit(session, node_id, new_content)


def _item_from_action(action: dict) -> AssumptionItem:
    from .tokens import tokenize

    assumption = str(action.get("assumption", "")).strip()
    act = str(action.get("action", "")).strip()
    if not assumption or not act:
        raise SchemaViolation("assumption and action text must be non-empty")
    return AssumptionItem(assumption=tokenize(assumption), action=tokenize(act))


def _index_in(action: dict, items: list) -> int:
    idx = action.get("index")
    if not isinstance(idx, int) or not 0 <= idx < len(items):
        raise SchemaViolation(f"assumption index {idx!r} out of range")
    return idx


# --- plan step toggles ------------------------------------------------------

def toggle_optional_step(
    session: Session, node_id: int, step_index: int, selected: bool
) -> str:
    """Flip an optional plan step's selection as a pending edit."""
    if session.graph is None:
        raise SchemaViolation("no task started")
    node = session.graph.node(node_id)
    if node.kind != NODE_PLAN:
        raise SchemaViolation(f"node {node_id} holds no plan")
    plan: PlanSteps = node.content
    steps = []
    found = False
    for step in plan.steps:
        if step.index == step_index:
            found = True
            if not step.optional:
                raise NotOptional(f"step {step_index} is required, not optional")
            step = PlanStep(
                index=step.index,
                text=step.text,
                optional=step.optional,
                selected=selected,
            )
        steps.append(step)
    if not found:
        raise SchemaViolation(f"plan has no step {step_index}")
    return apply_edit(session, node_id, PlanSteps(steps=tuple(steps)))


# --- branch switching -------------------------------------------------------

def switch_branch(
    session: Session, manager: KernelManager, branch_id: str
) -> list[ComponentNode]:
    """Activate a branch and restore its kernel state by replay.

    Returns the code nodes that were re-executed (empty when the branch
    was already active).
    """
    if session.graph is None:
        raise SchemaViolation("no task started")
    changed = session.record("branch_switched", {"branch_id": branch_id})
    if not changed:
        return []
    from .side import refresh_staleness

    refresh_staleness(session)
    return replay_active_branch(session, manager)


# --- phase A rejection wrapper ---------------------------------------------

def _raise_for_rejected_columns(exc: UnparseableAfterRetries) -> None:
    if isinstance(exc.last_error, ParseError) and exc.last_error.code == "unknown_column":
        raise RejectedColumns(list(exc.attempts), exc.last_error) from exc
    raise exc


__all__ = [
    "EDITABLE_BLOCK_KINDS",
    "RegenerationOutcome",
    "advance",
    "apply_edit",
    "apply_edit_text",
    "followup",
    "known_columns",
    "loaded_datasets",
    "mutate_phase_a",
    "regenerate_downstream",
    "replay_active_branch",
    "start_task",
    "strategy_state",
    "submit_edit",
    "switch_branch",
    "toggle_optional_step",
    "undo_edit",
]
