/**
 * Application state and the pure transitions over it.
 *
 * The store is a single mutable snapshot behind `update`; subscribers
 * re-render from the whole snapshot.  Everything that can be expressed
 * as a pure function over the state lives here so it can be unit
 * tested without a DOM.
 */

import type {
  Decision,
  ExportResult,
  ItemDetail,
  ItemSummary,
  PayloadInfo,
} from "./types.js";

/** Draft of the label the current reviewer is composing. */
export interface LabelDraft {
  decision: Decision | null;
  checkedTypes: Set<string>;
  extraTypes: string[];
  fpReason: string;
}

export interface AppState {
  items: ItemSummary[];
  selectedIndex: number;
  detail: ItemDetail | null;
  payloads: PayloadInfo[];
  reviewerId: string;
  draft: LabelDraft;
  exportResult: ExportResult | null;
  message: string;
  busy: boolean;
}

export const DEFAULT_FP_REASON = "misclassification";

export function initialState(): AppState {
  return {
    items: [],
    selectedIndex: -1,
    detail: null,
    payloads: [],
    reviewerId: "reviewer-a",
    draft: emptyDraft(),
    exportResult: null,
    message: "",
    busy: false,
  };
}

export function emptyDraft(): LabelDraft {
  return {
    decision: null,
    checkedTypes: new Set(),
    extraTypes: [],
    fpReason: DEFAULT_FP_REASON,
  };
}

/** Fresh draft for a newly opened item: detector types pre-checked. */
export function draftForDetail(detail: ItemDetail): LabelDraft {
  return {
    decision: null,
    checkedTypes: new Set(detail.verdict.pii_types),
    extraTypes: [],
    fpReason: DEFAULT_FP_REASON,
  };
}

/** Corrected types a true-positive label should carry. */
export function draftTypes(draft: LabelDraft): string[] {
  const types = new Set(draft.checkedTypes);
  for (const extra of draft.extraTypes) types.add(extra);
  return [...types].sort();
}

export function clampIndex(length: number, index: number): number {
  if (length === 0) return -1;
  return Math.min(Math.max(index, 0), length - 1);
}

/** Move the selection by `delta`, clamped to the list. */
export function movedSelection(state: AppState, delta: number): number {
  if (state.items.length === 0) return -1;
  const start = state.selectedIndex < 0 ? 0 : state.selectedIndex + delta;
  return clampIndex(state.items.length, start);
}

/** Index of the first unresolved item, or 0 when everything is done. */
export function firstOpenIndex(items: ItemSummary[]): number {
  if (items.length === 0) return -1;
  const open = items.findIndex((item) => !item.resolved);
  return open === -1 ? 0 : open;
}

/** Replace one summary row, preserving order. */
export function withItem(
  items: ItemSummary[],
  replacement: ItemSummary,
): ItemSummary[] {
  return items.map((item) =>
    item.item_id === replacement.item_id ? replacement : item,
  );
}

/** Summary row recomputed from a freshly fetched detail. */
export function summaryFromDetail(detail: ItemDetail): ItemSummary {
  return {
    item_id: detail.item_id,
    stage: detail.stage,
    bundle_id: detail.bundle_id,
    status: detail.status,
    pii_types: [...detail.verdict.pii_types],
    parse_status: detail.verdict.parse_status,
    labels: detail.labels.length,
    resolved: detail.resolution !== null,
  };
}

export interface ReviewCounts {
  total: number;
  pending: number;
  conflicts: number;
  resolved: number;
}

export function countByStatus(items: ItemSummary[]): ReviewCounts {
  const counts: ReviewCounts = {
    total: items.length,
    pending: 0,
    conflicts: 0,
    resolved: 0,
  };
  for (const item of items) {
    if (item.status === "resolved") counts.resolved += 1;
    else if (item.status === "labeled") counts.conflicts += 1;
    else counts.pending += 1;
  }
  return counts;
}

/** True once the item can no longer accept labels from this reviewer. */
export function labelFormLocked(
  detail: ItemDetail | null,
  reviewerId: string,
): boolean {
  if (detail === null) return true;
  if (detail.status !== "pending") return true;
  return detail.labels.some((label) => label.reviewer_id === reviewerId);
}

export type Listener = (state: AppState) => void;

export class Store {
  private snapshot: AppState;
  private listeners: Listener[] = [];

  constructor(snapshot: AppState = initialState()) {
    this.snapshot = snapshot;
  }

  get state(): AppState {
    return this.snapshot;
  }

  update(partial: Partial<AppState>): void {
    this.snapshot = { ...this.snapshot, ...partial };
    for (const listener of this.listeners) listener(this.snapshot);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((entry) => entry !== listener);
    };
  }
}
