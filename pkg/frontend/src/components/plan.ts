// Plan renderer. Mandatory steps are plain list items; only optional
// steps get a checkbox, and those arrive unchecked until the user opts
// in. Toggling posts to the plan-step endpoint and the server ack drives
// the refresh.

import { el } from "./dom.js";
import type { NodeView, PlanContent } from "../types.js";

export interface PlanActions {
  togglePlanStep(nodeId: number, index: number, selected: boolean): void;
}

export class PlanView {
  constructor(private readonly actions: PlanActions) {}

  render(node: NodeView): HTMLElement {
    const content = node.content as PlanContent;
    const list = el("ol", "plan-steps");
    for (const step of content.steps) {
      const row = el("li", step.optional ? "plan-step optional" : "plan-step");
      if (step.optional) {
        const box = el("input", "plan-step-toggle");
        box.type = "checkbox";
        box.checked = step.selected;
        box.addEventListener("change", () => {
          this.actions.togglePlanStep(node.id, step.index, box.checked);
        });
        row.appendChild(box);
      }
      row.appendChild(el("span", "plan-step-text", step.text));
      if (step.optional) row.appendChild(el("em", "plan-step-tag", "optional"));
      list.appendChild(row);
    }
    return list;
  }
}
