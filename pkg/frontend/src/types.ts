/**
 * Wire types for the review API.
 *
 * These mirror the JSON bodies the triage service exchanges; every
 * field name matches the server payload one to one.
 */

export type Decision = "true_positive" | "false_positive";

/** Reasons a reviewer may attach to a false-positive label. */
export const FP_REASONS = [
  "pii_asking_page",
  "sample_demo_content",
  "public_or_company_info",
  "keyword_match",
  "misclassification",
] as const;

export type FpReason = (typeof FP_REASONS)[number];

export interface VerdictInfo {
  item_id: string;
  stage: "ui" | "json";
  flagged: boolean;
  pii_types: string[];
  parse_status: string;
  raw_output: string;
  examples_by_type?: Record<string, string> | null;
  prompts_hash: string;
  adapter: string;
}

export interface LabelInfo {
  reviewer_id: string;
  decision: string;
  corrected_types: string[];
  fp_reason: string | null;
  noted_at: string;
}

export interface ResolutionInfo {
  item_id: string;
  final_decision: string;
  final_types: string[];
  method: string;
}

export interface ItemSummary {
  item_id: string;
  stage: string;
  bundle_id: string;
  status: string;
  pii_types: string[];
  parse_status: string;
  labels: number;
  resolved: boolean;
}

export interface ItemDetail {
  item_id: string;
  stage: string;
  bundle_id: string;
  status: string;
  domain: string | null;
  final_url: string | null;
  has_image: boolean;
  verdict: VerdictInfo;
  labels: LabelInfo[];
  resolution: ResolutionInfo | null;
}

export interface PayloadInfo {
  source: string;
  content_hash: string;
  origin_locator: string;
  json_text: string;
}

export interface LabelSubmission {
  reviewer_id: string;
  decision: Decision;
  corrected_types: string[];
  fp_reason?: string | null;
}

export interface LabelOutcome {
  item_id: string;
  status: string;
  resolution: ResolutionInfo | null;
}

export interface ResolutionSubmission {
  consensus: boolean;
  decision?: Decision | null;
  types?: string[] | null;
}

export interface ValidatedRow {
  bundle_id: string;
  item_id: string;
  stage: string;
  pii_types: string[];
  domain: string;
  final_url: string;
  url_id: string;
}

export interface ExportResult {
  count: number;
  validated: ValidatedRow[];
}
