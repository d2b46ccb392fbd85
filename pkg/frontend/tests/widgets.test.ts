// Per-widget contracts: which affordances exist, and which endpoint
// intent each one fires.

import { describe, expect, it } from "vitest";
import { ChatView } from "../src/components/chat.js";
import { CodeBlockView } from "../src/components/code.js";
import { ColumnCardsView } from "../src/components/chips.js";
import { BranchTabsView } from "../src/components/tabs.js";
import { PlanView } from "../src/components/plan.js";
import { ThreadsPanel } from "../src/components/sidepanel.js";
import { VariableInspectorView } from "../src/components/inspector.js";
import type {
  NodeView,
  SessionView,
  ThreadView,
  VariablePage,
  VariableSnapshot,
} from "../src/types.js";
import { loadWalkthrough } from "./helpers.js";

const fixture = loadWalkthrough();

function recordedView(step: string): SessionView {
  const exchange = fixture.exchanges.find((e) => e.step === step);
  if (!exchange) throw new Error(`no recorded step ${step}`);
  return exchange.response.body as SessionView;
}

function pathNode(view: SessionView, kind: NodeView["kind"]): NodeView {
  const node = view.path.find((n) => n.kind === kind);
  if (!node) throw new Error(`no ${kind} node in path`);
  return node;
}

function buttons(root: HTMLElement, className: string): HTMLButtonElement[] {
  return Array.from(root.querySelectorAll(`button.${className}`));
}

describe("plan steps", () => {
  const view = recordedView("refresh_pending");
  const plan = pathNode(view, "PlanPhase");

  it("puts checkboxes only on optional steps, unchecked by default", () => {
    const widget = new PlanView({ togglePlanStep: () => undefined });
    const root = widget.render(plan);
    const rows = Array.from(root.querySelectorAll("li"));
    expect(rows).toHaveLength(4);
    const boxes = root.querySelectorAll("input[type=checkbox]");
    expect(boxes).toHaveLength(1);
    const optionalRow = root.querySelector("li.optional");
    expect(optionalRow?.querySelector("input[type=checkbox]")).not.toBeNull();
    expect((boxes[0] as HTMLInputElement).checked).toBe(false);
  });

  it("fires the plan-step intent with the server index", () => {
    const calls: Array<[number, number, boolean]> = [];
    const widget = new PlanView({
      togglePlanStep: (nodeId, index, selected) => {
        calls.push([nodeId, index, selected]);
      },
    });
    const root = widget.render(plan);
    const box = root.querySelector<HTMLInputElement>("input[type=checkbox]");
    if (!box) throw new Error("no optional checkbox");
    box.checked = true;
    box.dispatchEvent(new Event("change"));
    expect(calls).toHaveLength(1);
    expect(calls[0]?.[0]).toBe(plan.id);
    expect(calls[0]?.[2]).toBe(true);
    // the index is the step's own number, not its list position
    const optionalIndex = (
      plan.content as { steps: Array<{ index: number; optional: boolean }> }
    ).steps.find((s) => s.optional)?.index;
    expect(calls[0]?.[1]).toBe(optionalIndex);
  });
});

describe("conversational chat", () => {
  it("renders read-only: no buttons, inputs, or textareas", () => {
    const widget = new ChatView();
    const root = widget.render([
      {
        id: 1,
        kind: "InputQuery",
        parent_id: null,
        children: [2],
        content: {
          kind: "task",
          query: "top products?",
          dataset_ids: [],
          strategy: "conversational",
        },
        edit_state: "clean",
        execution: null,
      },
      {
        id: 2,
        kind: "ConversationTurn",
        parent_id: 1,
        children: [],
        content: { kind: "answer", text: "here they are" },
        edit_state: "clean",
        execution: null,
      },
    ]);
    expect(root.querySelectorAll("button")).toHaveLength(0);
    expect(root.querySelectorAll("input")).toHaveLength(0);
    expect(root.querySelectorAll("textarea")).toHaveLength(0);
    expect(root.querySelector(".chat-bubble.user")).not.toBeNull();
    expect(root.querySelector(".chat-bubble.assistant")).not.toBeNull();
  });
});

describe("branch tabs", () => {
  it("renders a lone branch without any switch affordance", () => {
    const widget = new BranchTabsView({ switchBranch: () => undefined });
    const vs = recordedView("refresh_pending");
    const root = widget.render(
      vs.branches.map((branch) => ({ branch, switchable: false })),
    );
    expect(root.querySelectorAll("button")).toHaveLength(0);
    expect(root.querySelector("span.branch-tab")).not.toBeNull();
  });

  it("switches on clicking an inactive tab only", () => {
    const calls: string[] = [];
    const widget = new BranchTabsView({
      switchBranch: (id) => {
        calls.push(id);
      },
    });
    const vs = recordedView("final_view");
    const root = widget.render(
      vs.branches.map((branch) => ({ branch, switchable: true })),
    );
    const tabs = Array.from(root.querySelectorAll("button"));
    expect(tabs).toHaveLength(2);
    tabs[1]?.click(); // active: no call
    expect(calls).toEqual([]);
    tabs[0]?.click(); // inactive: switch
    expect(calls).toEqual(["b1"]);
  });
});

describe("variable inspector", () => {
  const listed = fixture.exchanges.find(
    (e) => e.step === "list_variables_after",
  )?.response.body as { variables: VariableSnapshot[] };
  const page = fixture.exchanges.find((e) => e.step === "inspect_open")
    ?.response.body as VariablePage;

  it("shows a value card without filter or fetch for non-tabular values", () => {
    const scalar = listed.variables.find((v) => v.kind === "scalar");
    if (!scalar) throw new Error("recording lists no scalar variable");
    const widget = new VariableInspectorView({
      fetchPage: () => {
        throw new Error("a value card must not fetch pages");
      },
    });
    widget.open(scalar);
    expect(widget.root.querySelector(".value-card")).not.toBeNull();
    expect(widget.root.querySelector(".inspector-filter")).toBeNull();
    expect(widget.root.querySelector(".inspector-pager")).toBeNull();
  });

  it("pages a dataframe and refetches on filter input", async () => {
    const frame = listed.variables.find((v) => v.name === page.name);
    if (!frame) throw new Error("recording lists no dataframe");
    const calls: Array<[string, string, number, number]> = [];
    const widget = new VariableInspectorView(
      {
        fetchPage: (name, filter, p, size) => {
          calls.push([name, filter, p, size]);
          return Promise.resolve(page);
        },
      },
      { debounceMs: 0 },
    );
    widget.open(frame);
    await widget.settled();
    expect(calls).toEqual([[page.name, "", 0, 50]]);
    expect(
      widget.root.querySelectorAll(".inspector-table tr").length,
    ).toBe(page.rows.length + 1);

    const filter = widget.root.querySelector<HTMLInputElement>(
      ".inspector-filter",
    );
    if (!filter) throw new Error("no filter input");
    filter.value = "Nivea";
    filter.dispatchEvent(new Event("input"));
    await widget.settled();
    expect(calls[1]).toEqual([page.name, "Nivea", 0, 50]);

    const label = widget.root.querySelector(".pager-label");
    expect(label?.textContent).toBe(
      `page 1 of 1 (${page.total_matches} matches)`,
    );
    const next = widget.root.querySelector<HTMLButtonElement>(".pager-next");
    expect(next?.disabled).toBe(true);
  });
});

describe("code block side actions", () => {
  const code = pathNode(recordedView("final_view"), "CodePhase");

  function build() {
    const asks: Array<[number, string, [number, number] | null]> = [];
    const gens: Array<[number, string, [number, number]]> = [];
    const widget = new CodeBlockView({
      saveCode: () => undefined,
      askQuestion: (id, q, sel) => {
        asks.push([id, q, sel]);
      },
      generateCode: (id, q, sel) => {
        gens.push([id, q, sel]);
      },
      inspectVariable: () => undefined,
    });
    const root = widget.render(code);
    const area = root.querySelector("textarea");
    if (!area) throw new Error("no code textarea");
    return { root, area, asks, gens };
  }

  it("asks about the whole block when nothing is selected", () => {
    const { root, area, asks } = build();
    area.selectionStart = 0;
    area.selectionEnd = 0;
    const generate = buttons(root, "generate-code")[0];
    expect(generate?.disabled).toBe(true);
    buttons(root, "ask-question")[0]?.click();
    expect(asks).toEqual([[code.id, "", null]]);
  });

  it("anchors both actions to the active selection", () => {
    const { root, area, asks, gens } = build();
    const query = root.querySelector<HTMLInputElement>(".side-query-input");
    if (query) query.value = "what does this slice do?";
    area.selectionStart = 2;
    area.selectionEnd = 14;
    area.dispatchEvent(new Event("select"));
    const generate = buttons(root, "generate-code")[0];
    expect(generate?.disabled).toBe(false);
    generate?.click();
    buttons(root, "ask-question")[0]?.click();
    expect(gens).toEqual([[code.id, "what does this slice do?", [2, 14]]]);
    expect(asks).toEqual([[code.id, "what does this slice do?", [2, 14]]]);
  });

  it("shows the execution output it was given", () => {
    const { root } = build();
    expect(root.querySelector(".execution-panel")).not.toBeNull();
    expect(root.querySelector(".execution-stdout")?.textContent).toContain(
      "Nivea",
    );
  });
});

describe("threads panel", () => {
  function thread(overrides: Partial<ThreadView>): ThreadView {
    return {
      id: "t1",
      node_id: 4,
      kind: "generate_code",
      query: "add a percentage column",
      selection: [0, 10],
      status: "answered",
      stale: false,
      response: { kind: "code", code: "pct = 1", language_tag: "python" },
      execution: null,
      mutation_warning: [],
      ...overrides,
    };
  }

  it("offers insert only for answered generated code", () => {
    const inserted: string[] = [];
    const widget = new ThreadsPanel({
      insertSnippet: (id) => {
        inserted.push(id);
      },
      discardThread: () => undefined,
    });
    const root = widget.render([thread({})]);
    const insert = buttons(root, "thread-insert")[0];
    expect(insert).not.toBeUndefined();
    insert?.click();
    expect(inserted).toEqual(["t1"]);

    const question = widget.render([
      thread({ id: "t2", kind: "ask_question", response: { kind: "answer", text: "yes" } }),
    ]);
    expect(buttons(question, "thread-insert")).toHaveLength(0);
    expect(buttons(question, "thread-discard")).toHaveLength(1);
  });

  it("marks stale threads and finished inserts", () => {
    const widget = new ThreadsPanel({
      insertSnippet: () => undefined,
      discardThread: () => undefined,
    });
    const root = widget.render([
      thread({ stale: true }),
      thread({ id: "t3", status: "inserted" }),
    ]);
    expect(root.querySelector(".thread-stale")).not.toBeNull();
    const cards = root.querySelectorAll(".thread-card");
    expect(cards[1]?.querySelector(".thread-inserted")).not.toBeNull();
    expect(cards[1]?.querySelectorAll("button")).toHaveLength(0);
  });
});

describe("column cards", () => {
  const node = pathNode(recordedView("refresh_pending"), "ColumnAssumptionsPhase");

  it("targets the output list with a null column", () => {
    const ops: unknown[] = [];
    const widget = new ColumnCardsView({
      applyChipOp: (_id, op) => {
        ops.push(op);
      },
    });
    const root = widget.render(node);
    const outputCard = Array.from(
      root.querySelectorAll<HTMLElement>(".column-card"),
    ).find((card) => card.querySelector(".output-column"));
    if (!outputCard) throw new Error("no output card");
    const remove = outputCard.querySelector<HTMLButtonElement>(".remove-chip");
    remove?.click();
    expect(ops).toEqual([
      { op: "remove_assumption", column: null, index: 0 },
    ]);
  });

  it("renders backtick references as highlighted tokens", () => {
    const widget = new ColumnCardsView({ applyChipOp: () => undefined });
    const root = widget.render(node);
    const tokens = Array.from(root.querySelectorAll(".chip .col-token")).map(
      (t) => t.textContent,
    );
    expect(tokens).toContain("Rating");
  });
});
