// Branch tab ribbon. With a single branch there is nothing to switch to,
// so the lone label is inert; with several, clicking an inactive tab
// posts the switch and the returned view repaints everything.

import { button, el } from "./dom.js";
import type { TabViewModel } from "../view.js";

export interface TabActions {
  switchBranch(branchId: string): void;
}

export class BranchTabsView {
  constructor(private readonly actions: TabActions) {}

  render(tabs: TabViewModel[]): HTMLElement {
    const bar = el("nav", "branch-tabs");
    for (const tab of tabs) {
      const className = tab.branch.active ? "branch-tab active" : "branch-tab";
      if (!tab.switchable) {
        bar.appendChild(el("span", className, tab.branch.label));
        continue;
      }
      const node = button(tab.branch.label, className, () => {
        if (!tab.branch.active) {
          this.actions.switchBranch(tab.branch.id);
        }
      });
      node.dataset["branch"] = tab.branch.id;
      bar.appendChild(node);
    }
    return bar;
  }
}
