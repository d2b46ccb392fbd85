// Code block with execution output and selection-anchored side actions.
// The textarea doubles as the editor: typing is a local draft and only
// Save posts it. Ask Question works with or without a selection (no
// selection means the whole block); Generate Code needs a selection.

import { button, el } from "./dom.js";
import type { CodeContent, ExecutionView, NodeView } from "../types.js";

export interface CodeActions {
  saveCode(nodeId: number, text: string): void;
  askQuestion(nodeId: number, query: string, selection: [number, number] | null): void;
  generateCode(nodeId: number, query: string, selection: [number, number]): void;
  inspectVariable(name: string): void;
}

export class CodeBlockView {
  constructor(private readonly actions: CodeActions) {}

  render(node: NodeView): HTMLElement {
    const content = node.content as CodeContent;
    const root = el("div", "code-block");

    const area = el("textarea", "code-text");
    area.value = content.code;
    area.rows = Math.max(4, content.code.split("\n").length + 1);
    area.spellcheck = false;
    root.appendChild(area);

    const bar = el("div", "code-actions");
    const save = button("save edit", "code-save", () => {
      if (area.value !== content.code) {
        this.actions.saveCode(node.id, area.value);
      }
    });
    bar.appendChild(save);

    const query = el("input", "side-query-input");
    query.placeholder = "question about this code";
    bar.appendChild(query);

    const selection = (): [number, number] | null => {
      const start = area.selectionStart ?? 0;
      const end = area.selectionEnd ?? 0;
      return end > start ? [start, end] : null;
    };

    const ask = button("ask question", "ask-question", () => {
      this.actions.askQuestion(node.id, query.value, selection());
    });
    const generate = button("generate code", "generate-code", () => {
      const span = selection();
      if (span === null) return;
      this.actions.generateCode(node.id, query.value, span);
    });
    generate.disabled = true;
    const syncSelection = () => {
      generate.disabled = selection() === null;
    };
    for (const evt of ["select", "keyup", "mouseup"]) {
      area.addEventListener(evt, syncSelection);
    }
    bar.appendChild(ask);
    bar.appendChild(generate);
    root.appendChild(bar);

    if (node.execution) {
      root.appendChild(this.executionPanel(node.execution));
    }
    return root;
  }

  private executionPanel(execution: ExecutionView): HTMLElement {
    const panel = el("div", "execution-panel");
    panel.appendChild(
      el(
        "span",
        `execution-status ${execution.status}`,
        `${execution.status} in ${execution.duration_ms} ms`,
      ),
    );
    if (execution.stdout) {
      panel.appendChild(el("pre", "execution-stdout", execution.stdout));
    }
    if (execution.error) {
      const box = el("div", "execution-error");
      box.appendChild(
        el("strong", "error-type", `${execution.error.type}: ${execution.error.message}`),
      );
      box.appendChild(el("pre", "error-traceback", execution.error.traceback));
      panel.appendChild(box);
    }
    for (const image of execution.images) {
      const img = el("img", "execution-image");
      img.src = `data:image/png;base64,${image}`;
      panel.appendChild(img);
    }
    if (execution.variables.length > 0) {
      const row = el("div", "variable-chips");
      for (const snapshot of execution.variables) {
        row.appendChild(
          button(snapshot.name, `variable-chip ${snapshot.kind}`, () =>
            this.actions.inspectVariable(snapshot.name),
          ),
        );
      }
      panel.appendChild(row);
    }
    return panel;
  }
}
