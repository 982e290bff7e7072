/**
 * Wire types for the session service (see docs/protocol.md).
 *
 * Every probability and timestamp travels as a string with 12 significant
 * digits; the console renders these strings as-is and only parses them for
 * bar widths and gauge geometry.
 */

export interface ModeledEventOut {
  name: string;
  satisfied_at: string;
  age_ms: string;
}

export interface DecisionOut {
  action: "offer" | "quiet";
  reason: "offered" | "threshold-not-met" | "suppressed";
  topics: [string, string][];
}

export interface CycleResult {
  t: string;
  modeled: ModeledEventOut[];
  p_help: string;
  needs: Record<string, string>;
  needs_actions: Record<string, string>;
  fused: boolean;
  decision: DecisionOut;
}

export interface CycleResultsResponse {
  results: CycleResult[];
  next_after: number;
}

export interface OfferStatus {
  status: "none" | "pending" | "acknowledged" | "dismissed" | "timeout";
  topics: string[];
  at_ms: string | null;
}

export interface SessionInfo {
  session_id: string;
  now_ms: string;
  threshold: number;
  effective_threshold: number;
  timeout_ms: number;
  top_k: number;
  cycle_count: number;
  declared_level: string;
  offer: OfferStatus;
}

export interface BundleInfo {
  goal_variable: string;
  goal_states: string[];
  assistance_variable: string;
  expertise_variable: string;
  expertise_states: string[];
  patterns: string[];
  atomic_symbols: string[];
  policy: string;
  threshold: number;
  timeout_ms: number;
  top_k: number;
}

export interface SummaryEntry {
  name: string;
  count: number;
}

export interface SummaryResponse {
  topics: SummaryEntry[];
}

export interface ThresholdResponse {
  threshold: number;
  effective_threshold: number;
}

/** Distributions sum to ~1; used only as a display sanity check. */
export function distributionTotal(dist: Record<string, string>): number {
  return Object.values(dist).reduce((acc, p) => acc + Number.parseFloat(p), 0);
}
