// Thin client for the scoring service. fetch is injectable so tests can
// run against a scripted mock instead of a live server.

import type { HealthResponse, Prediction, RulesResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn: FetchLike = (...a) => globalThis.fetch(...a)) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  /** Rule metadata, sorted by the service's declared index. */
  async rules(): Promise<RulesResponse> {
    const doc = (await this.getJson("/rules")) as RulesResponse;
    return { ...doc, rules: [...doc.rules].sort((a, b) => a.index - b.index) };
  }

  async health(): Promise<HealthResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/health`);
    // /health carries a body either way; 503 just means degraded
    return (await resp.json()) as HealthResponse;
  }

  async predict(wav: ArrayBuffer): Promise<Prediction> {
    const resp = await this.fetchFn(`${this.baseUrl}/predict`, {
      method: "POST",
      headers: { "Content-Type": "audio/wav" },
      body: wav,
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return (await resp.json()) as Prediction;
  }

  private async getJson(path: string): Promise<unknown> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return resp.json();
  }
}

async function errorMessage(resp: Response): Promise<string> {
  try {
    const doc = (await resp.json()) as { error?: string };
    if (doc && typeof doc.error === "string") {
      return doc.error;
    }
  } catch {
    // non-JSON body; fall through to the status line
  }
  return `request failed with status ${resp.status}`;
}
