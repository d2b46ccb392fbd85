// Conversational transcript. A strictly linear read-only chat: user
// queries on one side, generated answers and code on the other. No edit,
// undo, or submit affordances exist in this mode; the only input is the
// follow-up box the app renders beneath it.

import { el } from "./dom.js";
import type { ExecutionView, NodeView } from "../types.js";

export class ChatView {
  render(nodes: readonly NodeView[]): HTMLElement {
    const feed = el("div", "chat-feed");
    for (const node of nodes) {
      feed.appendChild(this.bubble(node));
    }
    return feed;
  }

  private bubble(node: NodeView): HTMLElement {
    const content = node.content;
    switch (content.kind) {
      case "task": {
        const b = el("div", "chat-bubble user");
        b.appendChild(el("p", "chat-text", content.query));
        return b;
      }
      case "answer": {
        const b = el("div", "chat-bubble assistant");
        b.appendChild(el("p", "chat-text", content.text));
        return b;
      }
      case "code": {
        const b = el("div", "chat-bubble assistant code-turn");
        b.appendChild(el("pre", "chat-code", content.code));
        if (node.execution) b.appendChild(this.output(node.execution));
        return b;
      }
      case "completion":
        return el("div", "chat-divider", "task complete");
      default: {
        const b = el("div", "chat-bubble assistant");
        b.appendChild(el("p", "chat-text", JSON.stringify(content)));
        return b;
      }
    }
  }

  private output(execution: ExecutionView): HTMLElement {
    const box = el("div", "chat-output");
    if (execution.stdout) {
      box.appendChild(el("pre", "chat-stdout", execution.stdout));
    }
    if (execution.error) {
      box.appendChild(
        el(
          "pre",
          "chat-error",
          `${execution.error.type}: ${execution.error.message}`,
        ),
      );
    }
    for (const image of execution.images) {
      const img = el("img", "chat-image");
      img.src = `data:image/png;base64,${image}`;
      box.appendChild(img);
    }
    return box;
  }
}
