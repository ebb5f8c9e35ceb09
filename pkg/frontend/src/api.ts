/**
 * Thin fetch client for the review API.
 *
 * All methods reject with ApiError on a non-2xx response, carrying the
 * server's `detail` message so the UI can show it verbatim (the server
 * uses 409 for workflow conflicts such as double labels or a blocked
 * export, and 422 for invalid submissions).
 */

import type {
  ExportResult,
  ItemDetail,
  ItemSummary,
  LabelOutcome,
  LabelSubmission,
  PayloadInfo,
  ResolutionInfo,
  ResolutionSubmission,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface ItemFilter {
  stage?: string;
  status?: string;
}

/** What the UI needs from the review service. */
export interface ReviewApi {
  listItems(filter?: ItemFilter): Promise<ItemSummary[]>;
  getItem(itemId: string): Promise<ItemDetail>;
  getPayloads(itemId: string): Promise<PayloadInfo[]>;
  imageUrl(itemId: string): string;
  submitLabel(itemId: string, label: LabelSubmission): Promise<LabelOutcome>;
  submitResolution(
    itemId: string,
    resolution: ResolutionSubmission,
  ): Promise<ResolutionInfo>;
  exportValidated(force?: boolean): Promise<ExportResult>;
}

export class TriageClient implements ReviewApi {
  private readonly base: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl: string, fetchFn: typeof fetch = fetch) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  listItems(filter: ItemFilter = {}): Promise<ItemSummary[]> {
    const params = new URLSearchParams();
    if (filter.stage) params.set("stage", filter.stage);
    if (filter.status) params.set("status", filter.status);
    const query = params.toString();
    return this.request(`/items${query ? `?${query}` : ""}`);
  }

  getItem(itemId: string): Promise<ItemDetail> {
    return this.request(`/items/${encodeURIComponent(itemId)}`);
  }

  getPayloads(itemId: string): Promise<PayloadInfo[]> {
    return this.request(`/items/${encodeURIComponent(itemId)}/payloads`);
  }

  /** URL for the captured page screenshot; suitable for an <img> src. */
  imageUrl(itemId: string): string {
    return `${this.base}/items/${encodeURIComponent(itemId)}/image`;
  }

  submitLabel(itemId: string, label: LabelSubmission): Promise<LabelOutcome> {
    return this.request(`/items/${encodeURIComponent(itemId)}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(label),
    });
  }

  submitResolution(
    itemId: string,
    resolution: ResolutionSubmission,
  ): Promise<ResolutionInfo> {
    return this.request(`/items/${encodeURIComponent(itemId)}/resolution`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(resolution),
    });
  }

  exportValidated(force = false): Promise<ExportResult> {
    return this.request(`/export/validated${force ? "?force=true" : ""}`);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${path}`, init);
    } catch (error) {
      throw new ApiError(0, `review service unreachable: ${String(error)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await extractDetail(response));
    }
    return (await response.json()) as T;
  }
}

async function extractDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    // fall through: body was not JSON
  }
  return response.statusText || `request failed (${response.status})`;
}
