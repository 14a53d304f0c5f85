/**
 * Typed client for the altriage service. Every view reads and writes
 * through this class; nothing in the UI computes a metric itself.
 */

import type {
  ConflictEntry,
  CounterfactualResult,
  FilterRules,
  FinalTable,
  Health,
  LabelAck,
  LabelValue,
  QueueItem,
  QueueSummary,
  RoundInfo,
  RoundReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** status 0: the request never reached the server. */
export function isOffline(err: unknown): boolean {
  return err instanceof ApiError && err.status === 0;
}

export interface CounterfactualRequest {
  source_id: string;
  direction: "flip_to_negative" | "flip_to_positive";
  span: string;
  position?: number;
}

export class Api {
  constructor(
    private readonly base: string,
    private token: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token !== null) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    let response: Response;
    try {
      response = await fetch(this.base + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch {
      throw new ApiError(0, "offline", `cannot reach ${this.base}`);
    }
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const code = typeof payload?.code === "string" ? payload.code : "internal_error";
      const message =
        typeof payload?.message === "string" ? payload.message : response.statusText;
      throw new ApiError(response.status, code, message);
    }
    return payload as T;
  }

  healthz(): Promise<Health> {
    return this.request("GET", "/healthz");
  }

  rules(): Promise<FilterRules> {
    return this.request("GET", "/rules");
  }

  rounds(): Promise<RoundInfo[]> {
    return this.request("GET", "/rounds");
  }

  startRound(mode: string, config: Record<string, unknown> = {}): Promise<RoundInfo> {
    return this.request("POST", "/rounds", { mode, config });
  }

  advanceRound(round: number): Promise<{ round: number; phase: string }> {
    return this.request("POST", `/rounds/${round}/advance`);
  }

  queueNext(strategy?: string): Promise<{ item: QueueItem | null }> {
    const query = strategy === undefined ? "" : `?strategy=${encodeURIComponent(strategy)}`;
    return this.request("GET", `/queue/next${query}`);
  }

  queueSummary(): Promise<QueueSummary> {
    return this.request("GET", "/queue/summary");
  }

  conflicts(): Promise<ConflictEntry[]> {
    return this.request("GET", "/conflicts");
  }

  submitLabel(recordId: string, label: LabelValue, oracleId: string): Promise<LabelAck> {
    return this.request("POST", "/labels", {
      record_id: recordId,
      label,
      oracle_id: oracleId,
    });
  }

  adjudicate(
    recordId: string,
    label: LabelValue,
    oracleId: string,
  ): Promise<{ record_id: string; label: string }> {
    return this.request("POST", "/labels/adjudicate", {
      record_id: recordId,
      label,
      oracle_id: oracleId,
    });
  }

  createCounterfactual(req: CounterfactualRequest): Promise<CounterfactualResult> {
    return this.request("POST", "/counterfactuals", req);
  }

  metrics(round: number, beta?: number): Promise<RoundReport> {
    const query = beta === undefined ? "" : `&beta=${beta}`;
    return this.request("GET", `/metrics?round=${round}${query}`);
  }

  metricsFinal(): Promise<FinalTable> {
    return this.request("GET", "/metrics/final");
  }

  record(id: string): Promise<QueueItem> {
    return this.request("GET", `/records/${encodeURIComponent(id)}`);
  }
}
