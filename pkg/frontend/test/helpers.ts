import type { EngineClient } from "../src/client.js";
import type { ConsoleClock } from "../src/session.js";
import type {
  CycleResult,
  CycleResultsResponse,
  OfferStatus,
  SessionInfo,
} from "../src/protocol.js";

export class ManualClock implements ConsoleClock {
  t = 0;
  private nextId = 1;
  private timers: { at: number; fn: () => void; id: number }[] = [];

  now(): number {
    return this.t;
  }

  setTimeout(fn: () => void, ms: number): unknown {
    const id = this.nextId++;
    this.timers.push({ at: this.t + ms, fn, id });
    return id;
  }

  clearTimeout(handle: unknown): void {
    this.timers = this.timers.filter((timer) => timer.id !== handle);
  }

  advance(ms: number): void {
    this.t += ms;
    const due = this.timers.filter((timer) => timer.at <= this.t).sort((a, b) => a.at - b.at);
    this.timers = this.timers.filter((timer) => timer.at > this.t);
    for (const timer of due) timer.fn();
  }
}

export function cycle(partial: Partial<CycleResult> & { t: string }): CycleResult {
  return {
    modeled: [],
    p_help: "0.5",
    needs: { a: "0.5", b: "0.5" },
    needs_actions: { a: "0.5", b: "0.5" },
    fused: false,
    decision: { action: "quiet", reason: "threshold-not-met", topics: [] },
    ...partial,
  };
}

export function sessionInfo(overrides: Partial<SessionInfo> = {}): SessionInfo {
  return {
    session_id: "test-session",
    now_ms: "0",
    threshold: 0.5,
    effective_threshold: 0.5,
    timeout_ms: 8000,
    top_k: 3,
    cycle_count: 0,
    declared_level: "novice",
    offer: { status: "none", topics: [], at_ms: null },
    ...overrides,
  };
}

/** In-memory stand-in for the service, recording every call. */
export class FakeClient {
  calls: string[] = [];
  buffer: CycleResult[] = [];
  eventResults: CycleResult[][] = [];
  tickResults: CycleResult[][] = [];
  queryResult: CycleResult | null = null;
  failNextEvent: string | null = null;

  async submitEvent(id: string, symbol: string, timestampMs: number): Promise<CycleResult[]> {
    this.calls.push(`event:${symbol}@${timestampMs}`);
    if (this.failNextEvent) {
      const detail = this.failNextEvent;
      this.failNextEvent = null;
      throw new Error(detail);
    }
    const results = this.eventResults.shift() ?? [];
    this.buffer.push(...results);
    return results;
  }

  async tick(id: string, nowMs: number): Promise<CycleResult[]> {
    this.calls.push(`tick:${nowMs}`);
    const results = this.tickResults.shift() ?? [];
    this.buffer.push(...results);
    return results;
  }

  async query(id: string, text: string, atMs?: number): Promise<CycleResult> {
    this.calls.push(`query:${text}@${atMs}`);
    if (!this.queryResult) throw new Error("no scripted query result");
    this.buffer.push(this.queryResult);
    return this.queryResult;
  }

  async results(id: string, after = 0): Promise<CycleResultsResponse> {
    this.calls.push(`results:${after}`);
    return { results: this.buffer.slice(after), next_after: this.buffer.length };
  }

  async setThreshold(id: string, value: number) {
    this.calls.push(`threshold:${value}`);
    return { threshold: value, effective_threshold: value };
  }

  async ack(id: string, topic: string): Promise<OfferStatus> {
    this.calls.push(`ack:${topic}`);
    return { status: "acknowledged", topics: [topic], at_ms: "0" };
  }

  async dismiss(id: string): Promise<OfferStatus> {
    this.calls.push("dismiss");
    return { status: "dismissed", topics: [], at_ms: "0" };
  }

  async summary(id: string, n = 5) {
    this.calls.push(`summary:${n}`);
    return { topics: [] };
  }

  asClient(): EngineClient {
    return this as unknown as EngineClient;
  }
}
