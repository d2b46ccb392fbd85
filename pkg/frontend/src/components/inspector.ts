// Variable inspector. Dataframes page through the fetch endpoint with a
// debounced substring filter; anything non-tabular renders as a plain
// value card straight from the snapshot, with no filter box and no
// fetch. Pager labels come from the server's total_matches.

import { button, clear, el } from "./dom.js";
import type { VariablePage, VariableSnapshot } from "../types.js";

export interface InspectorActions {
  fetchPage(
    name: string,
    filter: string,
    page: number,
    pageSize: number,
  ): Promise<VariablePage>;
}

export interface InspectorOptions {
  debounceMs?: number;
  pageSize?: number;
}

export class VariableInspectorView {
  readonly root: HTMLElement;
  private snapshot: VariableSnapshot | null = null;
  private filter = "";
  private page = 0;
  private data: VariablePage | null = null;
  private failure: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private loading: Promise<void> = Promise.resolve();
  private readonly debounceMs: number;
  private readonly pageSize: number;

  constructor(
    private readonly actions: InspectorActions,
    options: InspectorOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 250;
    this.pageSize = options.pageSize ?? 50;
    this.root = el("div", "inspector hidden");
  }

  open(snapshot: VariableSnapshot): void {
    this.snapshot = snapshot;
    this.filter = "";
    this.page = 0;
    this.data = null;
    this.failure = null;
    this.root.classList.remove("hidden");
    if (snapshot.kind === "dataframe") {
      this.load();
    } else {
      this.paint();
    }
  }

  close(): void {
    this.snapshot = null;
    this.root.classList.add("hidden");
    clear(this.root);
  }

  /** Resolves once the in-flight page fetch (if any) has painted. */
  settled(): Promise<void> {
    return this.loading;
  }

  private load(): void {
    const snapshot = this.snapshot;
    if (!snapshot) return;
    this.loading = this.actions
      .fetchPage(snapshot.name, this.filter, this.page, this.pageSize)
      .then((data) => {
        this.data = data;
        this.failure = null;
      })
      .catch((err: unknown) => {
        this.data = null;
        this.failure = err instanceof Error ? err.message : String(err);
      })
      .then(() => this.paint());
  }

  private scheduleLoad(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    if (this.debounceMs === 0) {
      this.load();
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.load();
    }, this.debounceMs);
  }

  private paint(): void {
    const snapshot = this.snapshot;
    if (!snapshot) return;
    clear(this.root);
    const head = el("header", "inspector-head");
    head.appendChild(el("code", "inspector-name", snapshot.name));
    head.appendChild(el("span", "inspector-type", snapshot.type_label));
    head.appendChild(button("close", "inspector-close", () => this.close()));
    this.root.appendChild(head);

    if (snapshot.kind !== "dataframe") {
      const card = el("div", "value-card");
      card.appendChild(
        el("pre", "value-preview", previewText(snapshot.preview)),
      );
      this.root.appendChild(card);
      return;
    }

    const filter = el("input", "inspector-filter");
    filter.placeholder = "filter rows";
    filter.value = this.filter;
    filter.addEventListener("input", () => {
      this.filter = filter.value;
      this.page = 0;
      this.scheduleLoad();
    });
    this.root.appendChild(filter);

    if (this.failure !== null) {
      this.root.appendChild(el("div", "inspector-error", this.failure));
      return;
    }
    const data = this.data;
    if (!data) {
      this.root.appendChild(el("div", "inspector-loading", "loading"));
      return;
    }

    const table = el("table", "inspector-table");
    const headRow = el("tr");
    for (const column of data.columns) {
      headRow.appendChild(el("th", undefined, column));
    }
    table.appendChild(headRow);
    for (const cells of data.rows) {
      const row = el("tr");
      for (const cell of cells) row.appendChild(el("td", undefined, cell));
      table.appendChild(row);
    }
    this.root.appendChild(table);

    const pages = Math.max(1, Math.ceil(data.total_matches / data.page_size));
    const pager = el("div", "inspector-pager");
    const prev = button("prev", "pager-prev", () => {
      this.page -= 1;
      this.load();
    });
    prev.disabled = data.page === 0;
    const next = button("next", "pager-next", () => {
      this.page += 1;
      this.load();
    });
    next.disabled = data.page + 1 >= pages;
    pager.appendChild(prev);
    pager.appendChild(
      el(
        "span",
        "pager-label",
        `page ${data.page + 1} of ${pages} (${data.total_matches} matches)`,
      ),
    );
    pager.appendChild(next);
    this.root.appendChild(pager);
  }
}

function previewText(preview: unknown): string {
  if (typeof preview === "string") return preview;
  return JSON.stringify(preview, null, 2) ?? "";
}
