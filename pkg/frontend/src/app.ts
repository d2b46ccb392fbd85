// Top-level composition. The app owns no session state of its own: every
// paint reads the store's last server payload through deriveViewState,
// and after painting it re-checks that the rendered node order equals the
// server's context path. Divergence is a bug, so it throws.

import { ApiError } from "./api.js";
import type { SessionStore } from "./store.js";
import { EventSourceStream, type StreamSource } from "./stream.js";
import { ChatView } from "./components/chat.js";
import { CodeBlockView } from "./components/code.js";
import { ColumnCardsView } from "./components/chips.js";
import { BranchTabsView } from "./components/tabs.js";
import { PlanView } from "./components/plan.js";
import { ThreadsPanel } from "./components/sidepanel.js";
import { VariableInspectorView } from "./components/inspector.js";
import { button, clear, el, renderTokens } from "./components/dom.js";
import { deriveViewState, orderMatchesServer } from "./view.js";
import type { NodeViewModel, ViewState } from "./view.js";
import type {
  AssumptionListContent,
  NodeView,
  SessionView,
  Strategy,
  TaskContent,
} from "./types.js";

export interface AppOptions {
  /** Inspector filter debounce; tests pass 0 for determinism. */
  inspectorDebounceMs?: number;
  /** Builds the live event stream; return null to run without one. */
  streamFactory?: (sessionId: string) => StreamSource | null;
}

export class App {
  private readonly chips: ColumnCardsView;
  private readonly plan: PlanView;
  private readonly code: CodeBlockView;
  private readonly tabs: BranchTabsView;
  private readonly chat: ChatView;
  private readonly threads: ThreadsPanel;
  readonly inspector: VariableInspectorView;
  private readonly errorBar: HTMLElement;
  private readonly streamFactory: (sessionId: string) => StreamSource | null;
  private streamSessionId: string | null = null;
  private variableSignature = "";

  constructor(
    private readonly host: HTMLElement,
    private readonly store: SessionStore,
    options: AppOptions = {},
  ) {
    this.streamFactory =
      options.streamFactory ??
      ((sessionId) => new EventSourceStream(`/sessions/${sessionId}/events`));
    this.inspector = new VariableInspectorView(
      {
        fetchPage: (name, filter, page, pageSize) =>
          store.fetchVariablePage(name, filter, page, pageSize),
      },
      { debounceMs: options.inspectorDebounceMs },
    );
    this.chips = new ColumnCardsView({
      applyChipOp: (nodeId, op) => this.run(store.editChip(nodeId, op)),
    });
    this.plan = new PlanView({
      togglePlanStep: (nodeId, index, selected) =>
        this.run(store.togglePlanStep(nodeId, index, selected)),
    });
    this.code = new CodeBlockView({
      saveCode: (nodeId, text) => this.run(store.editNodeText(nodeId, text)),
      askQuestion: (nodeId, query, selection) =>
        this.run(store.sideAsk(nodeId, query, selection)),
      generateCode: (nodeId, query, selection) =>
        this.run(store.sideGenerate(nodeId, query, selection)),
      inspectVariable: (name) => this.openInspector(name),
    });
    this.tabs = new BranchTabsView({
      switchBranch: (branchId) => this.run(store.switchBranch(branchId)),
    });
    this.chat = new ChatView();
    this.threads = new ThreadsPanel({
      insertSnippet: (threadId) => this.run(store.threadInsert(threadId)),
      discardThread: (threadId) => this.run(store.threadDiscard(threadId)),
    });
    this.errorBar = el("div", "error-bar hidden");
    store.subscribe(() => this.renderAll());
    this.renderAll();
  }

  // -- error surface ---------------------------------------------------

  private run(work: Promise<unknown>): void {
    work
      .then(() => {
        this.errorBar.textContent = "";
        this.errorBar.classList.add("hidden");
      })
      .catch((err: unknown) => this.showError(err));
  }

  private showError(err: unknown): void {
    this.errorBar.textContent =
      err instanceof ApiError
        ? `${err.body.error}: ${err.body.detail}`
        : String(err);
    this.errorBar.classList.remove("hidden");
  }

  // -- stream and variables --------------------------------------------

  private ensureStream(sessionId: string): void {
    if (this.streamSessionId === sessionId) return;
    this.store.detachStream();
    const source = this.streamFactory(sessionId);
    if (source) this.store.attachStream(source);
    this.streamSessionId = sessionId;
  }

  /** Refetch the kernel variable list when the executed frontier moved. */
  private maybeRefreshVariables(view: SessionView): void {
    const active = view.branches.find((b) => b.active);
    const executed = view.path
      .filter((n) => n.execution !== null)
      .map((n) => n.id)
      .join(",");
    if (executed === "") return;
    const signature = `${active?.id ?? ""}:${executed}`;
    if (signature === this.variableSignature) return;
    this.variableSignature = signature;
    this.run(this.store.refreshVariables());
  }

  openInspector(name: string): void {
    const snapshot = this.store.variables.find((v) => v.name === name);
    if (snapshot) this.inspector.open(snapshot);
  }

  // -- painting --------------------------------------------------------

  renderAll(): void {
    clear(this.host);
    this.host.appendChild(this.errorBar);
    const view = this.store.view;
    if (!view) {
      this.host.appendChild(this.setupForm());
      return;
    }
    this.ensureStream(view.id);
    const vs = deriveViewState(view);

    this.host.appendChild(this.headerBar(view));
    this.host.appendChild(this.datasetBar(view));

    const main = el("main", "workspace");
    if (vs.strategy === "conversational") {
      main.appendChild(this.conversational(view, vs));
    } else {
      main.appendChild(this.tabs.render(vs.tabs));
      const feed = el("div", "node-feed");
      for (const vm of vs.nodes) feed.appendChild(this.nodeCard(vm));
      main.appendChild(feed);
      main.appendChild(this.controls(view, vs));
    }
    this.host.appendChild(main);

    this.host.appendChild(this.variablesPanel());
    this.host.appendChild(this.threads.render(vs.threads));
    this.host.appendChild(this.inspector.root);

    const renderedIds = Array.from(
      this.host.querySelectorAll<HTMLElement>("[data-node-id]"),
    ).map((n) => Number(n.dataset["nodeId"]));
    if (!orderMatchesServer(renderedIds, view)) {
      throw new Error("rendered node order diverged from server context path");
    }
    this.maybeRefreshVariables(view);
  }

  private headerBar(view: SessionView): HTMLElement {
    const bar = el("header", "session-header");
    bar.appendChild(el("span", "session-strategy", view.strategy));
    bar.appendChild(el("code", "session-id", view.id));
    const state = view.state;
    if (state && typeof state["phase"] === "string") {
      bar.appendChild(el("span", "session-phase", state["phase"]));
    }
    if (state && state["completed"] === true) {
      bar.appendChild(el("span", "session-done", "completed"));
    }
    return bar;
  }

  private datasetBar(view: SessionView): HTMLElement {
    const bar = el("div", "dataset-bar");
    for (const dataset of view.datasets) {
      bar.appendChild(
        el(
          "span",
          "dataset-pill",
          `${dataset.name} (${dataset.row_count} rows)`,
        ),
      );
    }
    const input = el("input", "dataset-file");
    input.type = "file";
    bar.appendChild(input);
    bar.appendChild(
      button("upload dataset", "dataset-upload", () => {
        const file = input.files?.[0];
        if (file) this.run(this.store.uploadDataset(file));
      }),
    );
    return bar;
  }

  private conversational(view: SessionView, vs: ViewState): HTMLElement {
    const wrap = el("div", "chat-wrap");
    wrap.appendChild(this.chat.render(view.path));
    if (vs.showFollowupBox) {
      const box = el("div", "followup-box");
      const input = el("textarea", "followup-input");
      input.placeholder = "ask a follow-up";
      box.appendChild(input);
      box.appendChild(
        button("send", "followup-send", () => {
          const prompt = input.value.trim();
          if (prompt !== "") this.run(this.store.followup(prompt));
        }),
      );
      wrap.appendChild(box);
    } else if (view.path.length === 0) {
      wrap.appendChild(this.taskForm(view));
    }
    return wrap;
  }

  private controls(view: SessionView, vs: ViewState): HTMLElement {
    const bar = el("div", "control-bar");
    if (view.path.length === 0) {
      bar.appendChild(this.taskForm(view));
      return bar;
    }
    if (vs.canAdvance) {
      bar.appendChild(
        button("continue", "advance", () => this.run(this.store.advance())),
      );
    }
    bar.appendChild(
      button("interrupt", "interrupt", () =>
        this.run(this.store.interrupt()),
      ),
    );
    return bar;
  }

  private taskForm(view: SessionView): HTMLElement {
    const form = el("div", "task-form");
    const query = el("textarea", "task-query");
    query.placeholder = "what should the analysis find out?";
    form.appendChild(query);
    const picks = new Set<string>(view.datasets.map((d) => d.id));
    for (const dataset of view.datasets) {
      const row = el("label", "task-dataset");
      const box = el("input");
      box.type = "checkbox";
      box.checked = true;
      box.addEventListener("change", () => {
        if (box.checked) picks.add(dataset.id);
        else picks.delete(dataset.id);
      });
      row.appendChild(box);
      row.appendChild(document.createTextNode(dataset.name));
      form.appendChild(row);
    }
    form.appendChild(
      button("start task", "task-start", () => {
        const text = query.value.trim();
        if (text === "" || picks.size === 0) return;
        this.run(this.store.startTask(text, Array.from(picks)));
      }),
    );
    return form;
  }

  private nodeCard(vm: NodeViewModel): HTMLElement {
    const node = vm.node;
    const card = el("article", `node-card ${node.kind}`);
    card.dataset["nodeId"] = String(node.id);

    const head = el("header", "node-head");
    head.appendChild(el("span", "node-kind", node.kind));
    if (node.edit_state === "pending") {
      head.appendChild(el("span", "edit-badge pending", "pending"));
    }
    if (vm.undoVisible) {
      head.appendChild(
        button("undo", "node-undo", () =>
          this.run(this.store.undoEdit(node.id)),
        ),
      );
    }
    if (vm.submitVisible) {
      head.appendChild(
        button("submit", "node-submit", () =>
          this.run(this.store.submitNode(node.id)),
        ),
      );
    }
    card.appendChild(head);

    card.appendChild(this.nodeBody(vm));
    return card;
  }

  private nodeBody(vm: NodeViewModel): HTMLElement {
    const node = vm.node;
    switch (vm.editor) {
      case "column-cards": {
        const holder = el("div", "chips-holder");
        holder.dataset["chipsNode"] = String(node.id);
        holder.appendChild(this.chips.render(node));
        return holder;
      }
      case "plan":
        return this.plan.render(node);
      case "code":
        return this.code.render(node);
      case "assumption-list":
        return this.assumptionList(node);
      default:
        return this.plainBody(node);
    }
  }

  private assumptionList(node: NodeView): HTMLElement {
    const content = node.content as AssumptionListContent;
    const wrap = el("div", "assumption-list");
    const list = el("ul", "chip-list");
    for (const item of content.items) {
      const row = el("li", "chip-row");
      const chip = el("span", "chip readonly");
      chip.appendChild(renderTokens(item.assumption));
      row.appendChild(chip);
      const action = el("span", "chip-action");
      action.appendChild(renderTokens(item.action));
      row.appendChild(action);
      list.appendChild(row);
    }
    wrap.appendChild(list);

    // free-text edit in the same line grammar the server parses:
    // one "assumption - action" per line
    const area = el("textarea", "assumption-text");
    area.value = content.items
      .map((item) => `${item.assumption} - ${item.action}`)
      .join("\n");
    wrap.appendChild(area);
    wrap.appendChild(
      button("save edit", "assumption-save", () =>
        this.run(this.store.editNodeText(node.id, area.value)),
      ),
    );
    return wrap;
  }

  private plainBody(node: NodeView): HTMLElement {
    const content = node.content;
    switch (content.kind) {
      case "task": {
        const body = el("div", "task-body");
        body.appendChild(el("p", "task-text", (content as TaskContent).query));
        return body;
      }
      case "answer": {
        const body = el("div", "answer-body");
        body.appendChild(el("p", "answer-text", content.text));
        return body;
      }
      case "completion":
        return el("div", "completion-body", "analysis complete");
      default:
        return el("pre", "raw-body", JSON.stringify(content, null, 2));
    }
  }

  private variablesPanel(): HTMLElement {
    const panel = el("aside", "variables-panel");
    const variables = this.store.variables;
    if (variables.length === 0) return panel;
    panel.appendChild(el("h2", "variables-title", "variables"));
    const list = el("ul", "variable-list");
    for (const snapshot of variables) {
      const row = el("li", "variable-row");
      const open = button(snapshot.name, "variable-open", () =>
        this.inspector.open(snapshot),
      );
      row.appendChild(open);
      row.appendChild(el("span", "variable-kind", snapshot.kind));
      row.appendChild(el("span", "variable-type", snapshot.type_label));
      list.appendChild(row);
    }
    panel.appendChild(list);
    return panel;
  }

  private setupForm(): HTMLElement {
    const form = el("div", "setup-form");
    form.appendChild(el("h1", "setup-title", "new analysis session"));
    const select = el("select", "strategy-select");
    for (const strategy of ["conversational", "stepwise", "phasewise"]) {
      const option = el("option", undefined, strategy);
      option.value = strategy;
      select.appendChild(option);
    }
    form.appendChild(select);
    form.appendChild(
      button("create session", "session-create", () =>
        this.run(this.store.createSession(select.value as Strategy)),
      ),
    );
    return form;
  }
}
