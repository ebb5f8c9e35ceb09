/** Shared fixtures for DOM-driven tests. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiError } from "../src/api.js";
import type { ReviewApi } from "../src/api.js";
import type {
  Decision,
  ExportResult,
  ItemDetail,
  ItemSummary,
  LabelInfo,
  PayloadInfo,
  ResolutionInfo,
  VerdictInfo,
} from "../src/types.js";

/** Load the real page shell into the jsdom document. */
export function loadShell(): void {
  // Under the jsdom environment the module URL is served over a
  // localhost scheme with package-root-relative pathnames; the test
  // runner sets the worker's cwd to that same root.
  const url = new URL("../index.html", import.meta.url);
  const path =
    url.protocol === "file:"
      ? fileURLToPath(url)
      : url.pathname.startsWith("/@fs/")
        ? url.pathname.slice("/@fs".length)
        : join(process.cwd(), url.pathname);
  const html = readFileSync(path, "utf-8");
  const parsed = new DOMParser().parseFromString(html, "text/html");
  document.body.innerHTML = parsed.body.innerHTML;
}

export function makeVerdict(
  itemId: string,
  types: string[],
  stage: "ui" | "json" = "ui",
): VerdictInfo {
  return {
    item_id: itemId,
    stage,
    flagged: true,
    pii_types: [...types].sort(),
    parse_status: "exact",
    raw_output: `Y: ${types.join("; ")}`,
    examples_by_type: null,
    prompts_hash: "x".repeat(16),
    adapter: "rule_based",
  };
}

interface FakeRecord {
  detail: ItemDetail;
  payloads: PayloadInfo[];
}

/**
 * In-memory stand-in for the review service implementing the same
 * two-reviewer workflow: second agreeing label resolves the item,
 * disagreement parks it as `labeled` until a resolution arrives.
 */
export class FakeApi implements ReviewApi {
  readonly records = new Map<string, FakeRecord>();
  readonly labelCalls: Array<{ itemId: string; label: unknown }> = [];
  readonly resolutionCalls: Array<{ itemId: string; resolution: unknown }> = [];
  failNext: { status: number; detail: string } | null = null;

  addItem(itemId: string, types: string[], stage: "ui" | "json" = "ui"): void {
    const bundleId = itemId.split(":")[0];
    this.records.set(itemId, {
      detail: {
        item_id: itemId,
        stage,
        bundle_id: bundleId,
        status: "pending",
        domain: "service.test",
        final_url: `https://service.test/${bundleId}`,
        has_image: stage === "ui",
        verdict: makeVerdict(itemId, types, stage),
        labels: [],
        resolution: null,
      },
      payloads: [],
    });
  }

  private record(itemId: string): FakeRecord {
    const record = this.records.get(itemId);
    if (record === undefined) throw new Error(`fake has no item ${itemId}`);
    return record;
  }

  private maybeFail(): void {
    if (this.failNext !== null) {
      const { status, detail } = this.failNext;
      this.failNext = null;
      throw new ApiError(status, detail);
    }
  }

  async listItems(): Promise<ItemSummary[]> {
    return [...this.records.values()].map(({ detail }) => ({
      item_id: detail.item_id,
      stage: detail.stage,
      bundle_id: detail.bundle_id,
      status: detail.status,
      pii_types: detail.verdict.pii_types,
      parse_status: detail.verdict.parse_status,
      labels: detail.labels.length,
      resolved: detail.resolution !== null,
    }));
  }

  async getItem(itemId: string): Promise<ItemDetail> {
    const { detail } = this.record(itemId);
    return JSON.parse(JSON.stringify(detail)) as ItemDetail;
  }

  async getPayloads(itemId: string): Promise<PayloadInfo[]> {
    return this.record(itemId).payloads;
  }

  imageUrl(itemId: string): string {
    return `fake://image/${itemId}`;
  }

  async submitLabel(
    itemId: string,
    label: {
      reviewer_id: string;
      decision: Decision;
      corrected_types: string[];
      fp_reason?: string | null;
    },
  ): Promise<{ item_id: string; status: string; resolution: ResolutionInfo | null }> {
    this.maybeFail();
    this.labelCalls.push({ itemId, label });
    const { detail } = this.record(itemId);
    const entry: LabelInfo = {
      reviewer_id: label.reviewer_id,
      decision: label.decision,
      corrected_types:
        label.decision === "true_positive" && label.corrected_types.length === 0
          ? detail.verdict.pii_types
          : label.corrected_types,
      fp_reason: label.fp_reason ?? null,
      noted_at: "2026-04-01T12:00:00Z",
    };
    detail.labels.push(entry);
    if (detail.labels.length === 2) {
      const [first, second] = detail.labels;
      const agree =
        first.decision === second.decision &&
        (first.decision !== "true_positive" ||
          first.corrected_types.join("|") === second.corrected_types.join("|"));
      if (agree) {
        detail.resolution = {
          item_id: itemId,
          final_decision: first.decision,
          final_types:
            first.decision === "true_positive" ? first.corrected_types : [],
          method: "agreement",
        };
        detail.status = "resolved";
      } else {
        detail.status = "labeled";
      }
    }
    return { item_id: itemId, status: detail.status, resolution: detail.resolution };
  }

  async submitResolution(
    itemId: string,
    resolution: { consensus: boolean; decision?: Decision | null },
  ): Promise<ResolutionInfo> {
    this.maybeFail();
    this.resolutionCalls.push({ itemId, resolution });
    const { detail } = this.record(itemId);
    const final: ResolutionInfo = resolution.consensus
      ? {
          item_id: itemId,
          final_decision: resolution.decision ?? "false_positive",
          final_types:
            resolution.decision === "true_positive"
              ? detail.verdict.pii_types
              : [],
          method: "discussion",
        }
      : {
          item_id: itemId,
          final_decision: "false_positive",
          final_types: [],
          method: "default_false_positive",
        };
    detail.resolution = final;
    detail.status = "resolved";
    return final;
  }

  async exportValidated(): Promise<ExportResult> {
    this.maybeFail();
    const validated = [...this.records.values()]
      .filter(
        ({ detail }) =>
          detail.resolution !== null &&
          detail.resolution.final_decision === "true_positive",
      )
      .map(({ detail }) => ({
        bundle_id: detail.bundle_id,
        item_id: detail.item_id,
        stage: detail.stage,
        pii_types: detail.resolution!.final_types,
        domain: detail.domain ?? "",
        final_url: detail.final_url ?? "",
        url_id: "u-" + detail.bundle_id,
      }));
    return { count: validated.length, validated };
  }
}
