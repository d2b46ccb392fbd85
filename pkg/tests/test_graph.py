"""Session graph: edits, branching, context paths."""

import pytest

from datasteer.blocks import AnswerText, CodeBlock, TaskSpec
from datasteer.errors import (
    NotEditable,
    NothingPending,
    SchemaViolation,
    StaleBranch,
    UnknownBranch,
    UnknownNode,
)
from datasteer.graph import (
    EDIT_CLEAN,
    EDIT_PENDING,
    EDIT_SUBMITTED,
    NODE_CODE,
    NODE_CONVERSATION_TURN,
    NODE_PLAN,
    SessionGraph,
)

from .graphops import path_bytes, random_walk


def fresh():
    return SessionGraph.new(
        TaskSpec(query="top five", dataset_ids=("ds-1",), strategy="phasewise")
    )


def grown():
    """Root plus three appended nodes on the main branch."""
    g = fresh()
    g.append_node(g.active_branch, NODE_PLAN, AnswerText("assumptions v1"))
    g.append_node(g.active_branch, NODE_PLAN, AnswerText("plan v1"))
    g.append_node(g.active_branch, NODE_CODE, AnswerText("code v1"))
    return g


class TestAppend:
    def test_append_to_root(self):
        g = fresh()
        node = g.append_node(g.active_branch, NODE_PLAN, AnswerText("p"))
        assert len(g.active_path()) == 2
        assert g.active().leaf_id == node.id

    def test_two_appends_update_leaf_and_label(self):
        g = fresh()
        g.append_node(g.active_branch, NODE_PLAN, AnswerText("a"))
        second = g.append_node(g.active_branch, NODE_CODE, AnswerText("b"))
        assert g.active().leaf_id == second.id
        assert g.branch_label(g.active_branch) == "main, 3 nodes"

    def test_append_with_stale_parent(self):
        g = fresh()
        root_id = g.active().leaf_id
        g.append_node(g.active_branch, NODE_PLAN, AnswerText("a"))
        with pytest.raises(StaleBranch):
            g.append_under(g.active_branch, root_id, NODE_CODE, AnswerText("b"))

    def test_append_to_unknown_branch(self):
        g = fresh()
        with pytest.raises(UnknownBranch):
            g.append_node("b99", NODE_PLAN, AnswerText("a"))

    def test_node_ids_increase_monotonically(self):
        g = grown()
        assert sorted(g.nodes) == [n.id for n in g.active_path()]


class TestEdit:
    def test_edit_marks_pending(self):
        g = grown()
        leaf = g.active().leaf_id
        state = g.edit_node(leaf, AnswerText("code v2"))
        assert state == EDIT_PENDING
        assert g.node(leaf).content == AnswerText("code v2")
        assert g.node(leaf).original_content == AnswerText("code v1")

    def test_conversation_turn_not_editable(self):
        g = fresh()
        turn = g.append_node(
            g.active_branch, NODE_CONVERSATION_TURN, AnswerText("reply")
        )
        with pytest.raises(NotEditable):
            g.edit_node(turn.id, AnswerText("other"))

    def test_edit_twice_keeps_single_pending(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("v2"))
        g.edit_node(leaf, AnswerText("v3"))
        node = g.node(leaf)
        assert node.edit_state == EDIT_PENDING
        assert node.content == AnswerText("v3")

    def test_edit_back_to_original_clears_pending(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("v2"))
        g.edit_node(leaf, AnswerText("code v1"))
        assert g.node(leaf).edit_state == EDIT_CLEAN

    def test_edit_must_keep_content_type(self):
        g = grown()
        leaf = g.active().leaf_id
        with pytest.raises(SchemaViolation):
            g.edit_node(leaf, CodeBlock("x = 1", "python"))

    def test_edit_unknown_node(self):
        g = fresh()
        with pytest.raises(UnknownNode):
            g.edit_node(999, AnswerText("x"))


class TestUndo:
    def test_undo_restores_original(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("v2"))
        g.undo_pending(leaf)
        node = g.node(leaf)
        assert node.content == AnswerText("code v1")
        assert node.edit_state == EDIT_CLEAN

    def test_undo_clean_node(self):
        g = grown()
        with pytest.raises(NothingPending):
            g.undo_pending(g.active().leaf_id)

    def test_edit_undo_edit(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("v2"))
        g.undo_pending(leaf)
        g.edit_node(leaf, AnswerText("v3"))
        assert g.node(leaf).edit_state == EDIT_PENDING
        assert g.node(leaf).content == AnswerText("v3")

    def test_undo_after_submit_restores_submitted(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("v2"))
        g.submit_edit(leaf)
        g.edit_node(leaf, AnswerText("v3"))
        g.undo_pending(leaf)
        node = g.node(leaf)
        assert node.content == AnswerText("v2")
        assert node.edit_state == EDIT_SUBMITTED


class TestSubmit:
    def test_submit_on_leaf_stays_in_place(self):
        g = grown()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("code v2"))
        outcome = g.submit_edit(leaf)
        assert outcome.new_branch is None
        assert outcome.invalidated == []
        assert len(g.branches) == 1
        node = g.node(leaf)
        assert node.edit_state == EDIT_SUBMITTED
        assert node.content == AnswerText("code v2")
        assert node.original_content == AnswerText("code v1")

    def test_submit_above_leaf_branches(self):
        g = grown()
        path = g.active_path()
        edited = path[1]  # has two descendants
        old_branch = g.active_branch
        g.edit_node(edited.id, AnswerText("assumptions v2"))
        outcome = g.submit_edit(edited.id)
        assert outcome.new_branch is not None
        assert g.active_branch == outcome.new_branch.id
        assert outcome.invalidated == [path[2].id, path[3].id]
        # the new branch shares the upstream path, then carries an edited
        # copy; downstream nodes are not copied over
        new_path = g.active_path()
        assert [n.id for n in new_path] == [path[0].id, outcome.node_id]
        assert outcome.node_id not in {n.id for n in path}
        assert g.node(outcome.node_id).content == AnswerText("assumptions v2")
        # the original branch still yields the pre-edit content
        assert g.node(edited.id).content == AnswerText("assumptions v1")
        old_ids = [n.id for n in g.branch_path(old_branch)]
        assert old_ids == [n.id for n in path]

    def test_branch_origin_label(self):
        g = grown()
        edited = g.active_path()[1]
        g.edit_node(edited.id, AnswerText("x"))
        outcome = g.submit_edit(edited.id)
        assert outcome.new_branch.origin == "edited PlanPhase@2"
        assert g.branch_label(outcome.new_branch.id) == "edited PlanPhase@2, 2 nodes"

    def test_downstream_pending_left_behind(self):
        g = grown()
        path = g.active_path()
        g.edit_node(path[3].id, AnswerText("downstream pending"))
        g.edit_node(path[1].id, AnswerText("upstream edit"))
        outcome = g.submit_edit(path[1].id)
        # the stale downstream edit stays on the old branch only
        assert path[3].id in outcome.invalidated
        new_ids = {n.id for n in g.active_path()}
        assert path[3].id not in new_ids
        assert g.node(path[3].id).edit_state == EDIT_PENDING

    def test_submit_without_pending(self):
        g = grown()
        with pytest.raises(NothingPending):
            g.submit_edit(g.active().leaf_id)

    def test_root_edit_branches_to_sibling_root(self):
        g = grown()
        root = g.active_path()[0]
        g.edit_node(
            root.id,
            TaskSpec(query="top ten", dataset_ids=("ds-1",), strategy="phasewise"),
        )
        outcome = g.submit_edit(root.id)
        assert outcome.new_branch is not None
        new_root = g.node(outcome.node_id)
        assert new_root.parent_id is None
        assert g.active_path() == [new_root]
        assert new_root.content.query == "top ten"
        # the original tree is untouched
        assert g.node(root.id).content.query == "top five"
        assert len(g.branch_path(outcome.new_branch.created_from[0])) == 4


class TestSwitch:
    def branched(self):
        g = grown()
        edited = g.active_path()[1]
        g.edit_node(edited.id, AnswerText("v2"))
        outcome = g.submit_edit(edited.id)
        return g, outcome

    def test_switch_to_only_branch_is_noop(self):
        g = grown()
        assert g.switch_branch(g.active_branch) is False

    def test_switch_roundtrip_restores_path(self):
        g, outcome = self.branched()
        first = g.branches[0].id
        before = path_bytes(g, outcome.new_branch.id)
        assert g.switch_branch(first) is True
        assert g.switch_branch(outcome.new_branch.id) is True
        assert path_bytes(g, outcome.new_branch.id) == before

    def test_unknown_branch(self):
        g = fresh()
        with pytest.raises(UnknownBranch):
            g.switch_branch("b42")

    def test_pending_edit_survives_switch(self):
        g, outcome = self.branched()
        leaf = g.active().leaf_id
        g.edit_node(leaf, AnswerText("pending on new branch"))
        g.switch_branch(g.branches[0].id)
        g.switch_branch(outcome.new_branch.id)
        assert g.node(leaf).edit_state == EDIT_PENDING
        assert g.node(leaf).content == AnswerText("pending on new branch")


class TestContextPath:
    def test_full_path_root_first(self):
        g = grown()
        path = g.context_path(g.active().leaf_id)
        assert len(path) == 4
        assert path[0].parent_id is None
        assert [n.parent_id for n in path[1:]] == [n.id for n in path[:-1]]

    def test_root_only(self):
        g = fresh()
        root = g.active().leaf_id
        assert [n.id for n in g.context_path(root)] == [root]

    def test_unknown_node(self):
        g = fresh()
        with pytest.raises(UnknownNode):
            g.context_path(12345)

    def test_new_branch_path_contains_edit_never_original(self):
        g = grown()
        edited = g.active_path()[1]
        g.edit_node(edited.id, AnswerText("MARKER_EDITED"))
        g.submit_edit(edited.id)
        serialized = path_bytes(g, g.active_branch)
        assert "MARKER_EDITED" in serialized
        assert "assumptions v1" not in serialized

    def test_excludes_descendants(self):
        g = grown()
        middle = g.active_path()[1]
        ids = {n.id for n in g.context_path(middle.id)}
        descendants = {n.id for n in g.active_path()[2:]}
        assert not (ids & descendants)


class TestSerialization:
    def test_roundtrip_preserves_everything(self):
        g, _ = TestSwitch().branched()
        g.edit_node(g.active().leaf_id, AnswerText("pending edit"))
        d1 = g.to_json_dict()
        g2 = SessionGraph.from_json_dict(d1)
        assert g2.to_json_dict() == d1
        assert g2.active_branch == g.active_branch
        assert {b.id: path_bytes(g2, b.id) for b in g2.branches} == {
            b.id: path_bytes(g, b.id) for b in g.branches
        }

    def test_ids_continue_after_roundtrip(self):
        g = grown()
        g2 = SessionGraph.from_json_dict(g.to_json_dict())
        node = g2.append_node(g2.active_branch, NODE_CODE, AnswerText("later"))
        assert node.id not in g.nodes


class TestRandomWalks:
    def test_invariants_over_random_sequences(self):
        for seed in range(60):
            random_walk(seed, ops=12)
