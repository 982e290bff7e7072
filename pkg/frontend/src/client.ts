/** Thin HTTP client for the session service. */

import type {
  BundleInfo,
  CycleResult,
  CycleResultsResponse,
  OfferStatus,
  SessionInfo,
  SummaryResponse,
  ThresholdResponse,
} from "./protocol.js";

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body?.detail === "string" ? body.detail : JSON.stringify(body.detail ?? body);
    throw new ServiceError(response.status, detail);
  }
  return body as T;
}

export class EngineClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  bundle(): Promise<BundleInfo> {
    return request(this.url("/bundle"));
  }

  createSession(body: { declared_level?: string; threshold?: number } = {}): Promise<SessionInfo> {
    return request(this.url("/sessions"), { method: "POST", body: JSON.stringify(body) });
  }

  info(sessionId: string): Promise<SessionInfo> {
    return request(this.url(`/sessions/${sessionId}`));
  }

  close(sessionId: string): Promise<unknown> {
    return request(this.url(`/sessions/${sessionId}`), { method: "DELETE" });
  }

  async submitEvent(sessionId: string, symbol: string, timestampMs: number): Promise<CycleResult[]> {
    const page = await request<CycleResultsResponse>(this.url(`/sessions/${sessionId}/events`), {
      method: "POST",
      body: JSON.stringify({ symbol, timestamp_ms: timestampMs }),
    });
    return page.results;
  }

  async tick(sessionId: string, nowMs: number): Promise<CycleResult[]> {
    const page = await request<CycleResultsResponse>(this.url(`/sessions/${sessionId}/tick`), {
      method: "POST",
      body: JSON.stringify({ now_ms: nowMs }),
    });
    return page.results;
  }

  query(sessionId: string, text: string, atMs?: number): Promise<CycleResult> {
    return request(this.url(`/sessions/${sessionId}/query`), {
      method: "POST",
      body: JSON.stringify({ text, at_ms: atMs }),
    });
  }

  setThreshold(sessionId: string, value: number): Promise<ThresholdResponse> {
    return request(this.url(`/sessions/${sessionId}/threshold`), {
      method: "POST",
      body: JSON.stringify({ value }),
    });
  }

  ack(sessionId: string, topic: string): Promise<OfferStatus> {
    return request(this.url(`/sessions/${sessionId}/offers/ack`), {
      method: "POST",
      body: JSON.stringify({ topic }),
    });
  }

  dismiss(sessionId: string): Promise<OfferStatus> {
    return request(this.url(`/sessions/${sessionId}/offers/dismiss`), { method: "POST" });
  }

  results(sessionId: string, after = 0): Promise<CycleResultsResponse> {
    return request(this.url(`/sessions/${sessionId}/results?after=${after}`));
  }

  summary(sessionId: string, n = 5): Promise<SummaryResponse> {
    return request(this.url(`/sessions/${sessionId}/summary?n=${n}`));
  }

  /**
   * Server-push stream (SSE). Browser-only; tests use results() polling,
   * which delivers the identical records.
   */
  stream(sessionId: string, onResult: (result: CycleResult) => void): () => void {
    const source = new EventSource(this.url(`/sessions/${sessionId}/stream`));
    source.onmessage = (message) => onResult(JSON.parse(message.data) as CycleResult);
    return () => source.close();
  }
}
