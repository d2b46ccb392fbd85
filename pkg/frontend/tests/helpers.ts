// Test doubles built around the recorded walkthrough: a transport that
// serves the recording strictly in order (any call the recording does
// not expect fails the test) and a hand-fed stream source.

import { readFileSync } from "node:fs";
import type { HttpResponse, Transport } from "../src/api.js";
import type { StreamListener, StreamSource } from "../src/stream.js";
import type { StreamEvent } from "../src/types.js";

export interface RecordedExchange {
  step: string;
  request: {
    method: string;
    path: string;
    meta?: boolean;
    body?: unknown;
    upload?: {
      field: string;
      filename: string;
      content: string;
      content_type: string;
    };
  };
  response: { status: number; body: unknown };
}

export interface WalkthroughFixture {
  exchanges: RecordedExchange[];
}

export function loadWalkthrough(): WalkthroughFixture {
  // vitest runs from the package root
  const raw = readFileSync("tests/fixtures/walkthrough.json", "utf-8");
  return JSON.parse(raw) as WalkthroughFixture;
}

/** Recorded exchanges the client itself is expected to emit. */
export function clientExchanges(fixture: WalkthroughFixture): RecordedExchange[] {
  return fixture.exchanges.filter((e) => !e.request.meta);
}

export function metaExchange(
  fixture: WalkthroughFixture,
  step: string,
): RecordedExchange {
  const found = fixture.exchanges.find((e) => e.step === step);
  if (!found) throw new Error(`no recorded step named ${step}`);
  return found;
}

function canonical(value: unknown): string {
  return JSON.stringify(value, (_key, v: unknown) => {
    if (v !== null && typeof v === "object" && !Array.isArray(v)) {
      const sorted: Record<string, unknown> = {};
      for (const k of Object.keys(v as Record<string, unknown>).sort()) {
        sorted[k] = (v as Record<string, unknown>)[k];
      }
      return sorted;
    }
    return v;
  });
}

export interface SentCall {
  step: string;
  method: string;
  path: string;
  body?: unknown;
  filename?: string;
}

export class ScriptedTransport implements Transport {
  readonly calls: SentCall[] = [];
  private cursor = 0;

  constructor(private readonly exchanges: RecordedExchange[]) {}

  async request(
    method: string,
    path: string,
    init?: { json?: unknown; form?: FormData },
  ): Promise<HttpResponse> {
    const expected = this.exchanges[this.cursor];
    if (!expected) {
      throw new Error(
        `recording exhausted, client still sent ${method} ${path}`,
      );
    }
    this.cursor += 1;

    const sent: SentCall = { step: expected.step, method, path };
    if (init?.json !== undefined) sent.body = init.json;
    const file = init?.form?.get("file");
    if (file instanceof File) sent.filename = file.name;
    this.calls.push(sent);

    const want = expected.request;
    if (want.method !== method || want.path !== path) {
      throw new Error(
        `step ${expected.step}: recorded ${want.method} ${want.path}, ` +
          `client sent ${method} ${path}`,
      );
    }
    if (want.body !== undefined && canonical(want.body) !== canonical(sent.body)) {
      throw new Error(
        `step ${expected.step}: body diverged from the recording\n` +
          `recorded: ${canonical(want.body)}\n` +
          `sent:     ${canonical(sent.body)}`,
      );
    }
    if (want.upload !== undefined && sent.filename !== want.upload.filename) {
      throw new Error(
        `step ${expected.step}: recorded upload of ${want.upload.filename}, ` +
          `client sent ${sent.filename ?? "nothing"}`,
      );
    }
    return structuredClone(expected.response) as HttpResponse;
  }

  remainingSteps(): string[] {
    return this.exchanges.slice(this.cursor).map((e) => e.step);
  }
}

export class MockStream implements StreamSource {
  closed = false;
  private listener: StreamListener | null = null;

  connect(listener: StreamListener): void {
    this.listener = listener;
  }

  close(): void {
    this.closed = true;
  }

  emit(event: StreamEvent): void {
    this.listener?.(event);
  }
}

export function csvFile(name: string, content: string): File {
  return new File([content], name, { type: "text/csv" });
}
