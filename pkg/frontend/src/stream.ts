// Server event stream. The store attaches exactly one consumer per
// session; everything else in the client observes the store, never the
// stream directly.

import type { StreamEvent } from "./types.js";

export type StreamListener = (event: StreamEvent) => void;

export interface StreamSource {
  connect(listener: StreamListener): void;
  close(): void;
}

export class EventSourceStream implements StreamSource {
  private source: EventSource | null = null;
  private readonly url: string;

  constructor(sessionId: string, base = "") {
    this.url = `${base}/sessions/${sessionId}/events`;
  }

  connect(listener: StreamListener): void {
    if (this.source !== null) {
      throw new Error("stream already connected");
    }
    const source = new EventSource(this.url);
    // named events only; the server tags every event with its kind
    source.onmessage = (msg) => {
      listener(parseStreamMessage(msg.lastEventId, "message", msg.data));
    };
    const forward = (msg: MessageEvent) => {
      listener(parseStreamMessage(msg.lastEventId, msg.type, msg.data));
    };
    for (const kind of KNOWN_EVENT_KINDS) {
      source.addEventListener(kind, forward as EventListener);
    }
    this.source = source;
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}

export function parseStreamMessage(
  lastEventId: string,
  type: string,
  data: string,
): StreamEvent {
  const parsed = JSON.parse(data) as {
    kind?: string;
    at?: string;
    payload?: Record<string, unknown>;
  };
  return {
    seq: Number(lastEventId),
    kind: parsed.kind ?? type,
    at: parsed.at ?? "",
    payload: parsed.payload ?? {},
  };
}

// Parse a bounded text/event-stream replay body into events. Used by
// tests and by one-shot catch-up fetches (GET /events?after&limit).
export function parseEventStreamText(text: string): StreamEvent[] {
  const events: StreamEvent[] = [];
  for (const block of text.split("\n\n")) {
    let id = "";
    let type = "message";
    const dataLines: string[] = [];
    for (const line of block.split("\n")) {
      if (line.startsWith("id:")) {
        id = line.slice(3).trim();
      } else if (line.startsWith("event:")) {
        type = line.slice(6).trim();
      } else if (line.startsWith("data:")) {
        dataLines.push(line.slice(5).trim());
      }
    }
    if (dataLines.length > 0) {
      events.push(parseStreamMessage(id, type, dataLines.join("\n")));
    }
  }
  return events;
}

const KNOWN_EVENT_KINDS = [
  "session_created",
  "dataset_added",
  "task_started",
  "node_generated",
  "node_appended",
  "execution_attached",
  "edit_applied",
  "edit_undone",
  "edit_submitted",
  "branch_switched",
  "thread_opened",
  "thread_updated",
];
