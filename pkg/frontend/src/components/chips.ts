// Column-assumptions editor. Each assumption renders as a chip; clicking
// a chip swaps it for an inline editor. Saving with empty assumption text
// is refused client-side; everything else goes straight to the phase-a
// endpoint and the server's acknowledgment drives the re-render.

import { button, clear, el, renderTokens } from "./dom.js";
import type {
  AssumptionItem,
  ColumnAssumptionsContent,
  NodeView,
  PhaseAOp,
} from "../types.js";

export interface ChipActions {
  applyChipOp(nodeId: number, op: PhaseAOp): void;
}

interface EditorSpec {
  column: string | null;
  index: number | null; // null means "add new"
  item: AssumptionItem;
}

export class ColumnCardsView {
  private openEditor: EditorSpec | null = null;

  constructor(private readonly actions: ChipActions) {}

  render(node: NodeView): HTMLElement {
    const content = node.content as ColumnAssumptionsContent;
    const root = el("div", "column-cards");
    for (const [name, items] of content.columns) {
      root.appendChild(this.card(node, name, items));
    }
    root.appendChild(this.card(node, null, content.output));
    root.appendChild(this.addColumnRow(node));
    return root;
  }

  private addColumnRow(node: NodeView): HTMLElement {
    const row = el("div", "add-column-row");
    const input = el("input", "add-column-input");
    input.placeholder = "column name";
    row.appendChild(input);
    row.appendChild(
      button("add column", "add-column", () => {
        const column = input.value.trim();
        if (column === "") return;
        this.actions.applyChipOp(node.id, { op: "add_column", column });
      }),
    );
    return row;
  }

  private card(
    node: NodeView,
    column: string | null,
    items: AssumptionItem[],
  ): HTMLElement {
    const card = el("section", "column-card");
    const head = el("header", "column-card-head");
    head.appendChild(
      column === null
        ? el("span", "column-name output-column", "output")
        : el("code", "column-name", column),
    );
    if (column !== null) {
      head.appendChild(
        button("remove column", "remove-column", () =>
          this.actions.applyChipOp(node.id, { op: "remove_column", column }),
        ),
      );
    }
    card.appendChild(head);

    const list = el("ul", "chip-list");
    items.forEach((item, index) => {
      list.appendChild(this.chipRow(node, column, index, item));
    });
    card.appendChild(list);

    if (this.editorMatches(column, null)) {
      card.appendChild(
        this.editor(node, { column, index: null, item: { assumption: "", action: "" } }),
      );
    } else {
      card.appendChild(
        button("add assumption", "add-assumption", () => {
          this.openEditor = {
            column,
            index: null,
            item: { assumption: "", action: "" },
          };
          this.rerender(node);
        }),
      );
    }
    return card;
  }

  private chipRow(
    node: NodeView,
    column: string | null,
    index: number,
    item: AssumptionItem,
  ): HTMLElement {
    const row = el("li", "chip-row");
    if (this.editorMatches(column, index)) {
      row.appendChild(this.editor(node, { column, index, item }));
      return row;
    }
    const chip = el("span", "chip");
    chip.appendChild(renderTokens(item.assumption));
    chip.addEventListener("click", () => {
      this.openEditor = { column, index, item };
      this.rerender(node);
    });
    row.appendChild(chip);
    const action = el("span", "chip-action");
    action.appendChild(renderTokens(item.action));
    row.appendChild(action);
    row.appendChild(
      button("×", "remove-chip", () =>
        this.actions.applyChipOp(node.id, {
          op: "remove_assumption",
          column,
          index,
        }),
      ),
    );
    return row;
  }

  private editor(node: NodeView, spec: EditorSpec): HTMLElement {
    const form = el("div", "chip-editor");
    const assumptionInput = el("input", "chip-assumption-input");
    assumptionInput.value = spec.item.assumption;
    const actionInput = el("input", "chip-action-input");
    actionInput.value = spec.item.action;
    const preview = el("div", "chip-preview");
    const error = el("div", "chip-error");

    const repaint = () => {
      clear(preview);
      preview.appendChild(renderTokens(assumptionInput.value));
    };
    assumptionInput.addEventListener("input", repaint);
    repaint();

    form.appendChild(el("label", "chip-label", "assumption"));
    form.appendChild(assumptionInput);
    form.appendChild(preview);
    form.appendChild(el("label", "chip-label", "action"));
    form.appendChild(actionInput);
    form.appendChild(error);

    form.appendChild(
      button("save", "chip-save", () => {
        const assumption = assumptionInput.value.trim();
        if (assumption === "") {
          // refused locally; the endpoint is never called for empty text
          error.textContent = "assumption text cannot be empty";
          return;
        }
        const op: PhaseAOp =
          spec.index === null
            ? { op: "add_assumption", column: spec.column }
            : { op: "edit_assumption", column: spec.column, index: spec.index };
        op.assumption = assumption;
        op.action = actionInput.value.trim();
        this.openEditor = null;
        this.actions.applyChipOp(node.id, op);
      }),
    );
    form.appendChild(
      button("cancel", "chip-cancel", () => {
        this.openEditor = null;
        this.rerender(node);
      }),
    );
    return form;
  }

  private editorMatches(column: string | null, index: number | null): boolean {
    return (
      this.openEditor !== null &&
      this.openEditor.column === column &&
      this.openEditor.index === index
    );
  }

  // local-only state change (an input affordance, not session state), so
  // repaint in place instead of waiting for a server notification
  private rerender(node: NodeView): void {
    const host = document.querySelector(`[data-chips-node="${node.id}"]`);
    if (!(host instanceof HTMLElement)) return;
    clear(host);
    host.appendChild(this.render(node));
  }
}
