// Derives what the screen shows from the store's server state. Two
// hard rules live here: nodes render in exactly the server's
// context_path order, and the undo affordance exists iff the server
// reports the node's edit_state as pending.

import type {
  BranchView,
  NodeView,
  SessionView,
  Strategy,
  ThreadView,
} from "./types.js";

export interface NodeViewModel {
  node: NodeView;
  undoVisible: boolean;
  submitVisible: boolean;
  editor: EditorKind;
}

export type EditorKind =
  | "none"
  | "column-cards"
  | "assumption-list"
  | "plan"
  | "code"
  | "chat-turn";

export interface TabViewModel {
  branch: BranchView;
  switchable: boolean;
}

export interface ViewState {
  strategy: Strategy;
  nodes: NodeViewModel[];
  tabs: TabViewModel[];
  threads: ThreadView[];
  pending: number[];
  canAdvance: boolean;
  showFollowupBox: boolean;
}

function editorFor(kind: NodeView["kind"], strategy: Strategy): EditorKind {
  if (strategy === "conversational") {
    // linear chat: model turns and queries render read-only
    return kind === "ConversationTurn" || kind === "InputQuery"
      ? "chat-turn"
      : "none";
  }
  switch (kind) {
    case "ColumnAssumptionsPhase":
      return "column-cards";
    case "SubgoalAssumptions":
      return "assumption-list";
    case "PlanPhase":
      return "plan";
    case "CodePhase":
    case "SubgoalCode":
      return "code";
    default:
      return "none";
  }
}

export function deriveViewState(view: SessionView): ViewState {
  const completed = view.state?.completed === true;
  const started = view.path.length > 0;
  return {
    strategy: view.strategy,
    nodes: view.path.map((node) => ({
      node,
      undoVisible: node.edit_state === "pending",
      submitVisible: node.edit_state === "pending",
      editor: editorFor(node.kind, view.strategy),
    })),
    tabs: view.branches.map((branch) => ({
      branch,
      switchable: view.branches.length > 1,
    })),
    threads: view.threads.filter((t) => t.status !== "discarded"),
    pending: view.pending,
    canAdvance:
      started && !completed && view.strategy !== "conversational",
    showFollowupBox: view.strategy === "conversational" && started,
  };
}

// True when the rendered ids match the server's active path exactly.
// The renderer asserts this after every paint.
export function orderMatchesServer(
  renderedIds: number[],
  view: SessionView,
): boolean {
  const path = view.path.map((n) => n.id);
  return (
    renderedIds.length === path.length &&
    renderedIds.every((id, i) => id === path[i])
  );
}
