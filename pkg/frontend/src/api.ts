// Typed client for the orchestration server. One method per endpoint;
// the traceability table in docs/traceability.md maps every UI
// affordance onto exactly one of these methods.

import type {
  ApiErrorBody,
  CreatedNodes,
  EditAck,
  PhaseAOp,
  SessionSummary,
  SessionView,
  Strategy,
  SubmitResult,
  SwitchResult,
  ThreadView,
  UploadResult,
  VariablePage,
  VariableSnapshot,
} from "./types.js";

export interface HttpResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(
    method: string,
    path: string,
    init?: { json?: unknown; form?: FormData },
  ): Promise<HttpResponse>;
}

export class ApiError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.error}: ${body.detail}`);
    this.name = "ApiError";
    this.status = status;
    this.body = body;
  }
}

export class FetchTransport implements Transport {
  private base: string;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  async request(
    method: string,
    path: string,
    init?: { json?: unknown; form?: FormData },
  ): Promise<HttpResponse> {
    const options: RequestInit = { method };
    if (init?.json !== undefined) {
      options.headers = { "content-type": "application/json" };
      options.body = JSON.stringify(init.json);
    } else if (init?.form !== undefined) {
      options.body = init.form;
    }
    const response = await fetch(this.base + path, options);
    const text = await response.text();
    const body = text ? JSON.parse(text) : null;
    return { status: response.status, body };
  }
}

function isErrorBody(body: unknown): body is ApiErrorBody {
  return (
    typeof body === "object" &&
    body !== null &&
    "error" in body &&
    "detail" in body
  );
}

export class ApiClient {
  readonly transport: Transport;

  constructor(transport: Transport) {
    this.transport = transport;
  }

  private async call<T>(
    method: string,
    path: string,
    init?: { json?: unknown; form?: FormData },
  ): Promise<T> {
    const { status, body } = await this.transport.request(method, path, init);
    if (status >= 400) {
      const errorBody = isErrorBody(body)
        ? body
        : { error: `HTTP ${status}`, detail: JSON.stringify(body) };
      throw new ApiError(status, errorBody);
    }
    return body as T;
  }

  // -- session lifecycle -----------------------------------------------

  createSession(strategy: Strategy, maxSubgoals = 10): Promise<SessionView> {
    return this.call("POST", "/sessions", {
      json: { strategy, max_subgoals: maxSubgoals },
    });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.call("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.call("GET", `/sessions/${sessionId}`);
  }

  exportSession(sessionId: string): Promise<Record<string, unknown>> {
    return this.call("GET", `/sessions/${sessionId}/export`);
  }

  importSession(snapshot: Record<string, unknown>): Promise<SessionView> {
    return this.call("POST", "/sessions/import", { json: snapshot });
  }

  uploadDataset(sessionId: string, file: File): Promise<UploadResult> {
    const form = new FormData();
    form.append("file", file, file.name);
    return this.call("POST", `/sessions/${sessionId}/datasets`, { form });
  }

  // -- stepping --------------------------------------------------------

  startTask(
    sessionId: string,
    query: string,
    datasetIds: string[],
  ): Promise<CreatedNodes> {
    return this.call("POST", `/sessions/${sessionId}/query`, {
      json: { query, dataset_ids: datasetIds },
    });
  }

  advance(sessionId: string): Promise<CreatedNodes> {
    return this.call("POST", `/sessions/${sessionId}/advance`);
  }

  followup(sessionId: string, prompt: string): Promise<CreatedNodes> {
    return this.call("POST", `/sessions/${sessionId}/followup`, {
      json: { prompt },
    });
  }

  // -- edits -----------------------------------------------------------

  editNodeText(
    sessionId: string,
    nodeId: number,
    text: string,
  ): Promise<EditAck> {
    return this.call("POST", `/sessions/${sessionId}/nodes/${nodeId}/edit`, {
      json: { text },
    });
  }

  phaseA(sessionId: string, nodeId: number, op: PhaseAOp): Promise<EditAck> {
    return this.call("POST", `/sessions/${sessionId}/nodes/${nodeId}/phase-a`, {
      json: op,
    });
  }

  togglePlanStep(
    sessionId: string,
    nodeId: number,
    index: number,
    selected: boolean,
  ): Promise<EditAck> {
    return this.call(
      "POST",
      `/sessions/${sessionId}/nodes/${nodeId}/plan-step`,
      { json: { index, selected } },
    );
  }

  undoEdit(sessionId: string, nodeId: number): Promise<EditAck> {
    return this.call("POST", `/sessions/${sessionId}/nodes/${nodeId}/undo`);
  }

  submitNode(sessionId: string, nodeId: number): Promise<SubmitResult> {
    return this.call("POST", `/sessions/${sessionId}/nodes/${nodeId}/submit`);
  }

  submitPending(sessionId: string): Promise<SubmitResult> {
    return this.call("POST", `/sessions/${sessionId}/submit`);
  }

  // -- branches and variables ------------------------------------------

  switchBranch(sessionId: string, branchId: string): Promise<SwitchResult> {
    return this.call(
      "POST",
      `/sessions/${sessionId}/branches/${branchId}/switch`,
    );
  }

  listVariables(sessionId: string): Promise<{ variables: VariableSnapshot[] }> {
    return this.call("GET", `/sessions/${sessionId}/variables`);
  }

  fetchVariable(
    sessionId: string,
    name: string,
    filter = "",
    page = 0,
    pageSize = 50,
  ): Promise<VariablePage> {
    const params = new URLSearchParams({
      filter,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.call(
      "GET",
      `/sessions/${sessionId}/variables/${encodeURIComponent(name)}?${params}`,
    );
  }

  interrupt(sessionId: string): Promise<{ status: string }> {
    return this.call("POST", `/sessions/${sessionId}/interrupt`);
  }

  // -- side conversations ----------------------------------------------

  sideAsk(
    sessionId: string,
    nodeId: number,
    query: string,
    selection: [number, number] | null,
  ): Promise<ThreadView> {
    return this.call("POST", `/sessions/${sessionId}/side/ask`, {
      json: { node_id: nodeId, query, selection },
    });
  }

  sideGenerate(
    sessionId: string,
    nodeId: number,
    query: string,
    selection: [number, number] | null,
  ): Promise<ThreadView> {
    return this.call("POST", `/sessions/${sessionId}/side/generate`, {
      json: { node_id: nodeId, query, selection },
    });
  }

  sideQuery(
    sessionId: string,
    nodeId: number,
    query: string,
  ): Promise<ThreadView> {
    return this.call("POST", `/sessions/${sessionId}/side/query`, {
      json: { node_id: nodeId, query },
    });
  }

  threadInsert(sessionId: string, threadId: string): Promise<EditAck> {
    return this.call(
      "POST",
      `/sessions/${sessionId}/threads/${threadId}/insert`,
    );
  }

  threadDiscard(sessionId: string, threadId: string): Promise<ThreadView> {
    return this.call(
      "POST",
      `/sessions/${sessionId}/threads/${threadId}/discard`,
    );
  }
}
