// Session state container. Every field of `view` is a server payload
// applied verbatim: user intents call their endpoint, then apply the
// view the server returned (or re-fetch it when the reply is a bare
// ack). Nothing in the client writes into the view by hand, so the UI
// can never show a state the server has not acknowledged.

import { ApiClient } from "./api.js";
import type { StreamSource } from "./stream.js";
import type {
  EditAck,
  PhaseAOp,
  SessionView,
  StreamEvent,
  Strategy,
  SubmitResult,
  ThreadView,
  UploadResult,
  VariablePage,
  VariableSnapshot,
} from "./types.js";

export type StoreListener = () => void;

function deepFreeze<T>(value: T): T {
  if (value !== null && typeof value === "object" && !Object.isFrozen(value)) {
    Object.freeze(value);
    for (const key of Object.keys(value)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
  }
  return value;
}

export class SessionStore {
  readonly api: ApiClient;

  private currentView: SessionView | null = null;
  private currentVariables: VariableSnapshot[] = [];
  private listeners = new Set<StoreListener>();
  private stream: StreamSource | null = null;
  private refreshing: Promise<void> | null = null;
  private refreshQueued = false;
  private inFlight = 0;

  constructor(api: ApiClient) {
    this.api = api;
  }

  get view(): SessionView | null {
    return this.currentView;
  }

  get variables(): VariableSnapshot[] {
    return this.currentVariables;
  }

  get sessionId(): string {
    const view = this.currentView;
    if (view === null) {
      throw new Error("no session loaded");
    }
    return view.id;
  }

  subscribe(listener: StoreListener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  private applyView(view: SessionView): void {
    this.currentView = deepFreeze(view);
    this.notify();
  }

  // -- server sync -----------------------------------------------------

  // Ack-only replies carry no content, so the store reads the session
  // back before rendering; the pending/undone state the user sees is
  // always the server's.
  private async refresh(): Promise<void> {
    if (this.currentView === null) {
      return;
    }
    if (this.refreshing !== null) {
      this.refreshQueued = true;
      return this.refreshing;
    }
    this.refreshing = (async () => {
      this.applyView(await this.api.getSession(this.sessionId));
      this.refreshing = null;
      if (this.refreshQueued) {
        this.refreshQueued = false;
        await this.refresh();
      }
    })();
    return this.refreshing;
  }

  settled(): Promise<void> {
    return this.refreshing ?? Promise.resolve();
  }

  /** Resolves once no intent or refresh is in flight. */
  async whenIdle(): Promise<void> {
    while (this.inFlight > 0 || this.refreshing !== null) {
      await (this.refreshing ?? Promise.resolve());
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
  }

  attachStream(source: StreamSource): void {
    if (this.stream !== null) {
      throw new Error("an event stream consumer is already attached");
    }
    this.stream = source;
    source.connect((event) => this.onStreamEvent(event));
  }

  detachStream(): void {
    this.stream?.close();
    this.stream = null;
  }

  private onStreamEvent(event: StreamEvent): void {
    const view = this.currentView;
    if (view === null || event.seq <= view.last_seq) {
      return; // already reflected in the applied view
    }
    if (this.inFlight > 0) {
      return; // the response of the call in flight will carry this state
    }
    void this.refresh();
  }

  private async tracked<T>(work: () => Promise<T>): Promise<T> {
    this.inFlight += 1;
    try {
      return await work();
    } finally {
      this.inFlight -= 1;
    }
  }

  // -- lifecycle intents -----------------------------------------------

  async createSession(strategy: Strategy, maxSubgoals = 10): Promise<void> {
    await this.tracked(async () => {
      this.applyView(await this.api.createSession(strategy, maxSubgoals));
    });
  }

  async loadSession(sessionId: string): Promise<void> {
    this.applyView(await this.api.getSession(sessionId));
  }

  async uploadDataset(file: File): Promise<UploadResult> {
    return this.tracked(async () => {
      const result = await this.api.uploadDataset(this.sessionId, file);
      await this.refresh();
      return result;
    });
  }

  // -- task intents ----------------------------------------------------

  async startTask(query: string, datasetIds: string[]): Promise<void> {
    await this.tracked(async () => {
      const result = await this.api.startTask(this.sessionId, query, datasetIds);
      this.applyView(result.view);
    });
  }

  async advance(): Promise<void> {
    await this.tracked(async () => {
      this.applyView((await this.api.advance(this.sessionId)).view);
    });
  }

  async followup(prompt: string): Promise<void> {
    await this.tracked(async () => {
      this.applyView((await this.api.followup(this.sessionId, prompt)).view);
    });
  }

  // -- edit intents ----------------------------------------------------

  async editChip(nodeId: number, op: PhaseAOp): Promise<EditAck> {
    return this.tracked(async () => {
      const ack = await this.api.phaseA(this.sessionId, nodeId, op);
      await this.refresh();
      return ack;
    });
  }

  async editNodeText(nodeId: number, text: string): Promise<EditAck> {
    return this.tracked(async () => {
      const ack = await this.api.editNodeText(this.sessionId, nodeId, text);
      await this.refresh();
      return ack;
    });
  }

  async togglePlanStep(
    nodeId: number,
    index: number,
    selected: boolean,
  ): Promise<EditAck> {
    return this.tracked(async () => {
      const ack = await this.api.togglePlanStep(
        this.sessionId,
        nodeId,
        index,
        selected,
      );
      await this.refresh();
      return ack;
    });
  }

  async undoEdit(nodeId: number): Promise<EditAck> {
    return this.tracked(async () => {
      const ack = await this.api.undoEdit(this.sessionId, nodeId);
      await this.refresh();
      return ack;
    });
  }

  async submitNode(nodeId: number): Promise<SubmitResult> {
    return this.tracked(async () => {
      const result = await this.api.submitNode(this.sessionId, nodeId);
      this.applyView(result.view);
      return result;
    });
  }

  async interrupt(): Promise<void> {
    await this.tracked(async () => {
      await this.api.interrupt(this.sessionId);
      await this.refresh();
    });
  }

  async switchBranch(branchId: string): Promise<void> {
    await this.tracked(async () => {
      const result = await this.api.switchBranch(this.sessionId, branchId);
      this.applyView(result.view);
    });
  }

  // -- variables -------------------------------------------------------

  async refreshVariables(): Promise<void> {
    await this.tracked(async () => {
      const result = await this.api.listVariables(this.sessionId);
      this.currentVariables = deepFreeze(result.variables);
      this.notify();
    });
  }

  fetchVariablePage(
    name: string,
    filter: string,
    page: number,
    pageSize: number,
  ): Promise<VariablePage> {
    return this.api.fetchVariable(this.sessionId, name, filter, page, pageSize);
  }

  // -- side conversations ----------------------------------------------

  async sideAsk(
    nodeId: number,
    query: string,
    selection: [number, number] | null,
  ): Promise<ThreadView> {
    return this.tracked(async () => {
      const thread = await this.api.sideAsk(
        this.sessionId,
        nodeId,
        query,
        selection,
      );
      await this.refresh();
      return thread;
    });
  }

  async sideGenerate(
    nodeId: number,
    query: string,
    selection: [number, number] | null,
  ): Promise<ThreadView> {
    return this.tracked(async () => {
      const thread = await this.api.sideGenerate(
        this.sessionId,
        nodeId,
        query,
        selection,
      );
      await this.refresh();
      return thread;
    });
  }

  async sideQuery(nodeId: number, query: string): Promise<ThreadView> {
    return this.tracked(async () => {
      const thread = await this.api.sideQuery(this.sessionId, nodeId, query);
      await this.refresh();
      return thread;
    });
  }

  async threadInsert(threadId: string): Promise<EditAck> {
    return this.tracked(async () => {
      const ack = await this.api.threadInsert(this.sessionId, threadId);
      await this.refresh();
      return ack;
    });
  }

  async threadDiscard(threadId: string): Promise<void> {
    await this.tracked(async () => {
      await this.api.threadDiscard(this.sessionId, threadId);
      await this.refresh();
    });
  }
}
