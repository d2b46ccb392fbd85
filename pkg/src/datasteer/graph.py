"""Session graph: component nodes, edit states, branches.

Components form a tree rooted at the task query; each branch is one
root-to-leaf path presented as a tab. Edits are staged as pending, then
submitted. Submitting on the active leaf rewrites it in place; submitting
anywhere above copies the edited node onto a new branch that shares the
upstream path, while the original branch keeps the original content and
its now-detached downstream nodes. Editing the root query has no shared
upstream, so its submit starts a sibling root: the node store is strictly
a forest of branch-rooted trees, one tree per root ever edited.

This module is pure state; prompting, regeneration, and kernel replay
react to the returned outcomes elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .blocks import NodeContent, block_from_json, block_to_json
from .errors import (
    NotEditable,
    NothingPending,
    StaleBranch,
    UnknownBranch,
    UnknownNode,
)

NODE_INPUT_QUERY = "InputQuery"
NODE_COLUMN_ASSUMPTIONS = "ColumnAssumptionsPhase"
NODE_PLAN = "PlanPhase"
NODE_CODE = "CodePhase"
NODE_SUBGOAL_ASSUMPTIONS = "SubgoalAssumptions"
NODE_SUBGOAL_CODE = "SubgoalCode"
NODE_CONVERSATION_TURN = "ConversationTurn"
NODE_SIDE_ANCHOR = "SideAnchor"

NODE_KINDS = (
    NODE_INPUT_QUERY,
    NODE_COLUMN_ASSUMPTIONS,
    NODE_PLAN,
    NODE_CODE,
    NODE_SUBGOAL_ASSUMPTIONS,
    NODE_SUBGOAL_CODE,
    NODE_CONVERSATION_TURN,
    NODE_SIDE_ANCHOR,
)

EDIT_CLEAN = "clean"
EDIT_PENDING = "pending"
EDIT_SUBMITTED = "submitted"


def _compatible_content_types(new: NodeContent, old: NodeContent) -> bool:
    """Edits keep a node's content type, with one sanctioned swap: a subgoal
    assumption node may trade its completion signal for a fresh assumption
    list (and back), which is how an analysis resumes after early completion.
    """
    if type(new) is type(old):
        return True
    from .blocks import AssumptionList, CompletionSignal

    swap = {AssumptionList, CompletionSignal}
    return type(new) in swap and type(old) in swap


@dataclass
class ComponentNode:
    id: int
    kind: str
    content: NodeContent
    original_content: NodeContent  # frozen at creation, never reassigned
    parent_id: int | None
    children: list[int] = field(default_factory=list)
    edit_state: str = EDIT_CLEAN
    submitted_content: NodeContent | None = None
    execution: Any = None

    def baseline(self) -> NodeContent:
        """What an undo restores: the last submitted content, else the original."""
        return (
            self.submitted_content
            if self.submitted_content is not None
            else self.original_content
        )

    def to_json_dict(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "content": block_to_json(self.content),
            "original_content": block_to_json(self.original_content),
            "parent_id": self.parent_id,
            "children": list(self.children),
            "edit_state": self.edit_state,
            "submitted_content": (
                None
                if self.submitted_content is None
                else block_to_json(self.submitted_content)
            ),
            "execution": (
                None if self.execution is None else self.execution.to_json_dict()
            ),
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ComponentNode":
        if d.get("execution") is None:
            execution = None
        else:
            from .execution import ExecutionResult

            execution = ExecutionResult.from_json_dict(d["execution"])
        return cls(
            id=d["id"],
            kind=d["kind"],
            content=block_from_json(d["content"]),
            original_content=block_from_json(d["original_content"]),
            parent_id=d["parent_id"],
            children=list(d["children"]),
            edit_state=d["edit_state"],
            submitted_content=(
                None
                if d.get("submitted_content") is None
                else block_from_json(d["submitted_content"])
            ),
            execution=execution,
        )


@dataclass
class Branch:
    id: str
    origin: str  # "main", or "edited <kind>@<depth>"
    leaf_id: int
    created_from: tuple[str, int] | None  # (branch id, node id) it split from

    def label(self, path_len: int) -> str:
        return f"{self.origin}, {path_len} nodes"

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "leaf_id": self.leaf_id,
            "created_from": list(self.created_from) if self.created_from else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Branch":
        created = d.get("created_from")
        return cls(
            id=d["id"],
            origin=d["origin"],
            leaf_id=d["leaf_id"],
            created_from=tuple(created) if created else None,
        )


@dataclass
class SubmitOutcome:
    node_id: int  # the node now carrying the submitted content
    new_branch: Branch | None
    invalidated: list[int]


class SessionGraph:
    """All nodes and branches of one session, with a single active branch."""

    def __init__(self):
        self.nodes: dict[int, ComponentNode] = {}
        self.branches: list[Branch] = []
        self.active_branch: str = ""
        self._next_node_id = 1
        self._next_branch_id = 1

    # -- construction ---------------------------------------------------

    @classmethod
    def new(cls, root_content: NodeContent) -> "SessionGraph":
        g = cls()
        root = g._make_node(NODE_INPUT_QUERY, root_content, parent_id=None)
        branch = g._make_branch("main", root.id, created_from=None)
        g.active_branch = branch.id
        return g

    def _make_node(
        self, kind: str, content: NodeContent, parent_id: int | None
    ) -> ComponentNode:
        if kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind: {kind}")
        node = ComponentNode(
            id=self._next_node_id,
            kind=kind,
            content=content,
            original_content=content,
            parent_id=parent_id,
        )
        self._next_node_id += 1
        self.nodes[node.id] = node
        if parent_id is not None:
            self.nodes[parent_id].children.append(node.id)
        return node

    def _make_branch(
        self, origin: str, leaf_id: int, created_from: tuple[str, int] | None
    ) -> Branch:
        branch = Branch(
            id=f"b{self._next_branch_id}",
            origin=origin,
            leaf_id=leaf_id,
            created_from=created_from,
        )
        self._next_branch_id += 1
        self.branches.append(branch)
        return branch

    # -- lookups --------------------------------------------------------

    @property
    def next_node_id(self) -> int:
        """The id the next appended node will receive."""
        return self._next_node_id

    def node(self, node_id: int) -> ComponentNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def branch(self, branch_id: str) -> Branch:
        for b in self.branches:
            if b.id == branch_id:
                return b
        raise UnknownBranch(branch_id)

    def active(self) -> Branch:
        return self.branch(self.active_branch)

    def context_path(self, node_id: int) -> list[ComponentNode]:
        """Root-first path ending at the node: the prompt context scope."""
        path = []
        node = self.node(node_id)
        while True:
            path.append(node)
            if node.parent_id is None:
                break
            node = self.nodes[node.parent_id]
        path.reverse()
        return path

    def branch_path(self, branch_id: str) -> list[ComponentNode]:
        return self.context_path(self.branch(branch_id).leaf_id)

    def branch_label(self, branch_id: str) -> str:
        b = self.branch(branch_id)
        return b.label(len(self.branch_path(b.id)))

    def active_path(self) -> list[ComponentNode]:
        return self.branch_path(self.active_branch)

    def pending_node_ids(self, branch_id: str | None = None) -> list[int]:
        """Pending edits along one branch path, root-first."""
        path = self.branch_path(branch_id or self.active_branch)
        return [n.id for n in path if n.edit_state == EDIT_PENDING]

    def depth(self, node_id: int) -> int:
        return len(self.context_path(node_id))

    # -- mutations ------------------------------------------------------

    def append_node(
        self, branch_id: str, kind: str, content: NodeContent
    ) -> ComponentNode:
        branch = self.branch(branch_id)
        node = self._make_node(kind, content, parent_id=branch.leaf_id)
        branch.leaf_id = node.id
        return node

    def append_under(
        self, branch_id: str, parent_id: int, kind: str, content: NodeContent
    ) -> ComponentNode:
        """Append guarding against a stale leaf pointer."""
        branch = self.branch(branch_id)
        if branch.leaf_id != parent_id:
            raise StaleBranch(
                f"parent {parent_id} is not the current leaf of {branch_id}"
            )
        return self.append_node(branch_id, kind, content)

    def edit_node(self, node_id: int, new_content: NodeContent) -> str:
        node = self.node(node_id)
        if node.kind == NODE_CONVERSATION_TURN:
            raise NotEditable("conversation replies cannot be edited")
        if not _compatible_content_types(new_content, node.baseline()):
            from .errors import SchemaViolation

            raise SchemaViolation(
                f"edit must keep the node's content type"
                f" ({type(node.baseline()).__name__})"
            )
        if new_content == node.baseline():
            # an edit back to the last accepted content leaves nothing pending
            node.content = node.baseline()
            node.edit_state = (
                EDIT_SUBMITTED if node.submitted_content is not None else EDIT_CLEAN
            )
        else:
            node.content = new_content
            node.edit_state = EDIT_PENDING
        return node.edit_state

    def undo_pending(self, node_id: int) -> None:
        node = self.node(node_id)
        if node.edit_state != EDIT_PENDING:
            raise NothingPending(f"node {node_id} has no pending edit")
        node.content = node.baseline()
        node.edit_state = (
            EDIT_SUBMITTED if node.submitted_content is not None else EDIT_CLEAN
        )

    def submit_edit(self, node_id: int) -> SubmitOutcome:
        node = self.node(node_id)
        if node.edit_state != EDIT_PENDING:
            raise NothingPending(f"node {node_id} has no pending edit")
        active = self.active()
        edited = node.content
        if active.leaf_id == node.id:
            # editing the last component rewrites it in place, no new branch
            node.submitted_content = edited
            node.edit_state = EDIT_SUBMITTED
            return SubmitOutcome(node.id, None, [])
        # above the leaf: the original branch keeps the original content and
        # its downstream nodes; the edited copy starts a new active branch
        old_path, pos = self._containing_path(node.id)
        invalidated = [n.id for n in old_path[pos + 1 :]]
        node.content = node.baseline()
        node.edit_state = (
            EDIT_SUBMITTED if node.submitted_content is not None else EDIT_CLEAN
        )
        copy = self._make_node(node.kind, edited, parent_id=node.parent_id)
        copy.submitted_content = edited
        copy.edit_state = EDIT_SUBMITTED
        origin = f"edited {node.kind}@{pos + 1}"
        branch = self._make_branch(origin, copy.id, created_from=(active.id, node.id))
        self.active_branch = branch.id
        return SubmitOutcome(copy.id, branch, invalidated)

    def _containing_path(self, node_id: int) -> tuple[list[ComponentNode], int]:
        """A branch path holding the node, active branch first, with its index."""
        ordered = [self.active_branch] + [
            b.id for b in self.branches if b.id != self.active_branch
        ]
        for branch_id in ordered:
            path = self.branch_path(branch_id)
            for i, n in enumerate(path):
                if n.id == node_id:
                    return path, i
        # node exists but hangs off no branch leaf path; scope is its ancestry
        path = self.context_path(node_id)
        return path, len(path) - 1

    def switch_branch(self, branch_id: str) -> bool:
        """Activate a branch; returns False when it was already active."""
        branch = self.branch(branch_id)
        if branch.id == self.active_branch:
            return False
        self.active_branch = branch.id
        return True

    # -- serialization --------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                self.nodes[i].to_json_dict() for i in sorted(self.nodes)
            ],
            "branches": [b.to_json_dict() for b in self.branches],
            "active_branch": self.active_branch,
            "next_node_id": self._next_node_id,
            "next_branch_id": self._next_branch_id,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SessionGraph":
        g = cls()
        for nd in d["nodes"]:
            node = ComponentNode.from_json_dict(nd)
            g.nodes[node.id] = node
        g.branches = [Branch.from_json_dict(bd) for bd in d["branches"]]
        g.active_branch = d["active_branch"]
        g._next_node_id = d["next_node_id"]
        g._next_branch_id = d["next_branch_id"]
        return g
