// Side-conversation panel. Threads hang off a node without touching the
// main history; a generated snippet offers Insert (which does stage a
// main-history edit server-side), answers offer Discard, and threads the
// server marked stale wear a badge.

import { button, el } from "./dom.js";
import type { ThreadView } from "../types.js";

export interface ThreadActions {
  insertSnippet(threadId: string): void;
  discardThread(threadId: string): void;
}

const KIND_LABELS: Record<ThreadView["kind"], string> = {
  ask_question: "question",
  generate_code: "generated code",
  side_query: "side query",
};

export class ThreadsPanel {
  constructor(private readonly actions: ThreadActions) {}

  render(threads: readonly ThreadView[]): HTMLElement {
    const panel = el("aside", "threads-panel");
    if (threads.length === 0) return panel;
    panel.appendChild(el("h2", "threads-title", "side conversations"));
    for (const thread of threads) {
      panel.appendChild(this.card(thread));
    }
    return panel;
  }

  private card(thread: ThreadView): HTMLElement {
    const card = el("article", `thread-card ${thread.status}`);
    const head = el("header", "thread-head");
    head.appendChild(el("span", "thread-kind", KIND_LABELS[thread.kind]));
    head.appendChild(el("span", "thread-node", `node ${thread.node_id}`));
    if (thread.stale) head.appendChild(el("span", "thread-stale", "stale"));
    card.appendChild(head);

    card.appendChild(el("p", "thread-query", thread.query));

    const response = thread.response;
    if (response) {
      if (response.kind === "code") {
        card.appendChild(el("pre", "thread-code", response.code));
      } else if (response.kind === "answer") {
        card.appendChild(el("p", "thread-answer", response.text));
      }
    }
    if (thread.execution?.stdout) {
      card.appendChild(el("pre", "thread-stdout", thread.execution.stdout));
    }
    for (const warning of thread.mutation_warning) {
      card.appendChild(el("p", "thread-warning", warning));
    }

    const bar = el("div", "thread-actions");
    if (thread.kind === "generate_code" && thread.status === "answered") {
      bar.appendChild(
        button("insert", "thread-insert", () =>
          this.actions.insertSnippet(thread.id),
        ),
      );
    }
    if (thread.status === "open" || thread.status === "answered") {
      bar.appendChild(
        button("discard", "thread-discard", () =>
          this.actions.discardThread(thread.id),
        ),
      );
    }
    if (thread.status === "inserted") {
      bar.appendChild(el("span", "thread-inserted", "inserted"));
    }
    card.appendChild(bar);
    return card;
  }
}
