/**
 * View-model for one console session. Holds everything the panels render
 * and talks to the service; it never computes probabilities itself — every
 * number on screen is a string lifted verbatim from a streamed CycleResult.
 *
 * Time is split in two: the session's *virtual* clock (event timestamps and
 * ticks, advanced by macros) and the injectable wall clock that drives the
 * offer popup countdown.
 */

import type { EngineClient } from "./client.js";
import type { CycleResult, SessionInfo, SummaryEntry } from "./protocol.js";

export interface ConsoleClock {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

export const realClock: ConsoleClock = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

export interface StreamEntry {
  kind: "atomic" | "modeled" | "note";
  label: string;
  t: string;
}

export interface PopupState {
  topics: [string, string][];
  pHelp: string;
  openedAtWall: number;
  timeoutMs: number;
  outcome: "open" | "acknowledged" | "dismissed" | "timed-out";
}

export interface QueryView {
  text: string;
  before: Record<string, string>; // action-only distribution
  after: Record<string, string>; // fused distribution
}

export const DEFAULT_EVENT_GAP_MS = 250;
export const BURST_GAP_MS = 300;

export class ConsoleSession {
  readonly sessionId: string;
  threshold: number;
  timeoutMs: number;
  declaredLevel: string;

  virtualNow = 0;
  entries: StreamEntry[] = [];
  lastCycle: CycleResult | null = null;
  popup: PopupState | null = null;
  queryView: QueryView | null = null;
  summary: SummaryEntry[] = [];
  lastError: string | null = null;

  private appliedCount = 0;
  private popupTimer: unknown = null;
  private listeners: (() => void)[] = [];

  constructor(
    private readonly client: EngineClient,
    info: SessionInfo,
    private readonly clock: ConsoleClock = realClock,
  ) {
    this.sessionId = info.session_id;
    this.threshold = info.threshold;
    this.timeoutMs = info.timeout_ms;
    this.declaredLevel = info.declared_level;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  // --- stream application ----------------------------------------------------

  /** Apply one new cycle result (stream order). */
  applyCycle(result: CycleResult): void {
    this.appliedCount += 1;
    this.lastCycle = result;
    for (const modeled of result.modeled) {
      const label = `${modeled.name} (age ${modeled.age_ms}ms)`;
      const last = this.entries[this.entries.length - 1];
      if (!last || last.kind !== "modeled" || last.label !== label || last.t !== result.t) {
        this.entries.push({ kind: "modeled", label, t: result.t });
      }
    }
    if (result.decision.action === "offer") {
      this.openPopup(result);
    }
    this.notify();
  }

  /**
   * Apply a full-stream replay (e.g. an SSE reconnect backlog); records
   * already applied are skipped, so re-rendering the same stream is
   * idempotent.
   */
  applyBacklog(results: CycleResult[]): void {
    for (const result of results.slice(this.appliedCount)) {
      this.applyCycle(result);
    }
  }

  /** Poll for unseen results and apply them (the test-path stream). */
  async sync(): Promise<void> {
    const page = await this.client.results(this.sessionId, 0);
    this.applyBacklog(page.results);
  }

  // --- event injection --------------------------------------------------------

  /** Submit one atomic event after a virtual gap; server rejections roll
   * the echo back and surface inline. */
  async injectEvent(symbol: string, gapMs = DEFAULT_EVENT_GAP_MS): Promise<void> {
    this.virtualNow += gapMs;
    const at = this.virtualNow;
    this.entries.push({ kind: "atomic", label: symbol, t: String(at) });
    try {
      const results = await this.client.submitEvent(this.sessionId, symbol, at);
      this.lastError = null;
      this.applyBacklogDirect(results);
    } catch (error) {
      this.entries.pop();
      this.virtualNow -= gapMs;
      this.lastError = error instanceof Error ? error.message : String(error);
    }
    this.notify();
  }

  /** Scripted burst: `count` events with fixed virtual gaps. */
  async burst(symbol: string, count: number, gapMs = BURST_GAP_MS): Promise<void> {
    for (let i = 0; i < count; i += 1) {
      await this.injectEvent(symbol, gapMs);
    }
  }

  /** Advance virtual time with no events and run the cycles that come due. */
  async pause(ms: number): Promise<void> {
    this.virtualNow += ms;
    this.entries.push({ kind: "note", label: `pause ${ms}ms`, t: String(this.virtualNow) });
    const results = await this.client.tick(this.sessionId, this.virtualNow);
    this.applyBacklogDirect(results);
    this.notify();
  }

  private applyBacklogDirect(results: CycleResult[]): void {
    for (const result of results) this.applyCycle(result);
  }

  // --- queries ------------------------------------------------------------------

  /** Submit a free-text query; renders before/after distributions. */
  async submitQuery(text: string): Promise<CycleResult | null> {
    if (!text.trim()) {
      return null; // empty query is a no-op
    }
    const result = await this.client.query(this.sessionId, text, this.virtualNow);
    this.appliedCount += 1; // the forced cycle also lands in the stream
    this.lastCycle = result;
    this.queryView = { text, before: result.needs_actions, after: result.needs };
    if (result.decision.action === "offer") {
      this.openPopup(result);
    }
    this.notify();
    return result;
  }

  // --- threshold ------------------------------------------------------------------

  async setThreshold(value: number): Promise<void> {
    const response = await this.client.setThreshold(this.sessionId, value);
    this.threshold = response.threshold;
    this.notify();
  }

  // --- offer popup ------------------------------------------------------------------

  private openPopup(result: CycleResult): void {
    if (this.popupTimer !== null) {
      this.clock.clearTimeout(this.popupTimer);
      this.popupTimer = null;
    }
    this.popup = {
      topics: result.decision.topics,
      pHelp: result.p_help,
      openedAtWall: this.clock.now(),
      timeoutMs: this.timeoutMs,
      outcome: "open",
    };
    this.popupTimer = this.clock.setTimeout(() => {
      void this.expirePopup();
    }, this.timeoutMs);
  }

  popupRemainingMs(): number {
    if (!this.popup || this.popup.outcome !== "open") return 0;
    const elapsed = this.clock.now() - this.popup.openedAtWall;
    return Math.max(this.popup.timeoutMs - elapsed, 0);
  }

  private async expirePopup(): Promise<void> {
    if (!this.popup || this.popup.outcome !== "open") return;
    this.popup.outcome = "timed-out";
    this.popupTimer = null;
    try {
      await this.client.dismiss(this.sessionId);
    } catch {
      // the server may have already timed the offer out on its own clock
    }
    this.notify();
  }

  async acknowledge(topic: string): Promise<void> {
    if (!this.popup || this.popup.outcome !== "open") return;
    this.clock.clearTimeout(this.popupTimer);
    this.popupTimer = null;
    this.popup.outcome = "acknowledged";
    await this.client.ack(this.sessionId, topic);
    this.notify();
  }

  async dismiss(): Promise<void> {
    if (!this.popup || this.popup.outcome !== "open") return;
    this.clock.clearTimeout(this.popupTimer);
    this.popupTimer = null;
    this.popup.outcome = "dismissed";
    await this.client.dismiss(this.sessionId);
    this.notify();
  }

  // --- summary ------------------------------------------------------------------

  async refreshSummary(n = 5): Promise<void> {
    const response = await this.client.summary(this.sessionId, n);
    this.summary = response.topics;
    this.notify();
  }
}

/** Open a session and wrap it in a view-model. */
export async function openConsoleSession(
  client: EngineClient,
  options: { declaredLevel?: string; threshold?: number; clock?: ConsoleClock } = {},
): Promise<ConsoleSession> {
  const info = await client.createSession({
    declared_level: options.declaredLevel,
    threshold: options.threshold,
  });
  return new ConsoleSession(client, info, options.clock ?? realClock);
}
