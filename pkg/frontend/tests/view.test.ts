// View-state invariants: node order mirrors the server path, undo
// exists iff the server says pending, tabs switch only when there is
// more than one branch, and conversational mode is a read-only chat.

import { describe, expect, it } from "vitest";
import { deriveViewState, orderMatchesServer } from "../src/view.js";
import type {
  NodeContent,
  NodeView,
  SessionView,
} from "../src/types.js";
import { loadWalkthrough } from "./helpers.js";

const fixture = loadWalkthrough();

function recordedView(step: string): SessionView {
  const exchange = fixture.exchanges.find((e) => e.step === step);
  if (!exchange) throw new Error(`no recorded step ${step}`);
  return exchange.response.body as SessionView;
}

function syntheticNode(
  id: number,
  kind: NodeView["kind"],
  content: NodeContent,
  editState: NodeView["edit_state"] = "clean",
): NodeView {
  return {
    id,
    kind,
    parent_id: id > 1 ? id - 1 : null,
    children: [],
    content,
    edit_state: editState,
    execution: null,
  };
}

function conversationalView(): SessionView {
  return {
    id: "synthetic",
    strategy: "conversational",
    created_at: "2026-08-22T00:00:00Z",
    datasets: [],
    selected: [],
    state: { strategy: "conversational", started: true, completed: false },
    branches: [{ id: "b1", label: "main", active: true, leaf_id: 3 }],
    path: [
      syntheticNode(1, "InputQuery", {
        kind: "task",
        query: "what drives the score?",
        dataset_ids: [],
        strategy: "conversational",
      }),
      syntheticNode(2, "ConversationTurn", {
        kind: "answer",
        text: "the score tracks price",
      }),
      syntheticNode(3, "ConversationTurn", {
        kind: "code",
        code: "print(1)",
        language_tag: "python",
      }),
    ],
    pending: [],
    threads: [],
    last_seq: 4,
  };
}

describe("deriveViewState", () => {
  it("shows undo and submit exactly on server-pending nodes", () => {
    const vs = deriveViewState(recordedView("refresh_pending"));
    const flags = vs.nodes.map((n) => [n.node.id, n.undoVisible]);
    expect(flags).toEqual([
      [1, false],
      [2, true],
      [3, false],
      [4, false],
    ]);
    expect(vs.nodes.map((n) => n.submitVisible)).toEqual(
      vs.nodes.map((n) => n.undoVisible),
    );
  });

  it("keeps the node list in server path order", () => {
    const view = recordedView("final_view");
    const vs = deriveViewState(view);
    expect(vs.nodes.map((n) => n.node.id)).toEqual(
      view.path.map((n) => n.id),
    );
  });

  it("picks the editor from the node kind", () => {
    const vs = deriveViewState(recordedView("refresh_pending"));
    expect(vs.nodes.map((n) => n.editor)).toEqual([
      "none",
      "column-cards",
      "plan",
      "code",
    ]);
  });

  it("makes tabs switchable only with more than one branch", () => {
    const single = deriveViewState(recordedView("refresh_pending"));
    expect(single.tabs).toHaveLength(1);
    expect(single.tabs[0]?.switchable).toBe(false);

    const forked = deriveViewState(recordedView("final_view"));
    expect(forked.tabs).toHaveLength(2);
    expect(forked.tabs.every((t) => t.switchable)).toBe(true);
  });

  it("renders conversational mode as a chat with a follow-up box", () => {
    const vs = deriveViewState(conversationalView());
    expect(vs.showFollowupBox).toBe(true);
    expect(vs.canAdvance).toBe(false);
    expect(vs.nodes.map((n) => n.editor)).toEqual([
      "chat-turn",
      "chat-turn",
      "chat-turn",
    ]);
  });

  it("hides discarded threads", () => {
    const view = conversationalView();
    view.threads = [
      {
        id: "t1",
        node_id: 2,
        kind: "ask_question",
        query: "why?",
        selection: null,
        status: "discarded",
        stale: false,
        response: null,
        execution: null,
        mutation_warning: [],
      },
      {
        id: "t2",
        node_id: 2,
        kind: "ask_question",
        query: "how?",
        selection: null,
        status: "answered",
        stale: false,
        response: { kind: "answer", text: "so" },
        execution: null,
        mutation_warning: [],
      },
    ];
    const vs = deriveViewState(view);
    expect(vs.threads.map((t) => t.id)).toEqual(["t2"]);
  });
});

describe("orderMatchesServer", () => {
  const view = recordedView("final_view");
  const ids = view.path.map((n) => n.id);

  it("accepts the exact server order", () => {
    expect(orderMatchesServer(ids, view)).toBe(true);
  });

  it("rejects reordering, omission, and extras", () => {
    expect(orderMatchesServer([...ids].reverse(), view)).toBe(false);
    expect(orderMatchesServer(ids.slice(1), view)).toBe(false);
    expect(orderMatchesServer([...ids, 99], view)).toBe(false);
  });
});
