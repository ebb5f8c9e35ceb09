/**
 * Controller for the review UI.
 *
 * Owns the store, talks to the review API, and re-renders the dynamic
 * regions on every state change.  All mutating actions funnel through
 * `run`, which tracks busyness for the status bar, reports failures,
 * and lets tests await quiescence via `idle()`.
 */

import { ApiError } from "./api.js";
import type { ReviewApi } from "./api.js";
import { bindKeyboard } from "./keyboard.js";
import {
  countByStatus,
  draftForDetail,
  draftTypes,
  emptyDraft,
  firstOpenIndex,
  labelFormLocked,
  movedSelection,
  Store,
  summaryFromDetail,
  withItem,
} from "./state.js";
import {
  renderCounts,
  renderDetail,
  renderExport,
  renderList,
  renderStatusBar,
} from "./render.js";
import { FP_REASONS } from "./types.js";
import type { Decision, LabelSubmission } from "./types.js";

interface Regions {
  list: HTMLElement;
  detail: HTMLElement;
  counts: HTMLElement;
  statusBar: HTMLElement;
  exportPane: HTMLElement;
  reviewerInput: HTMLInputElement;
  exportForce: HTMLInputElement;
  exportButton: HTMLElement;
}

function region<T extends HTMLElement>(root: ParentNode, id: string): T {
  const node = root.querySelector(`#${id}`);
  if (node === null) throw new Error(`markup is missing #${id}`);
  return node as T;
}

export class TriageApp {
  readonly store = new Store();
  private readonly client: ReviewApi;
  private readonly regions: Regions;
  private inflight = 0;
  private idleWaiters: Array<() => void> = [];
  private unbindKeyboard: (() => void) | null = null;

  constructor(root: ParentNode, client: ReviewApi) {
    this.client = client;
    this.regions = {
      list: region(root, "item-list"),
      detail: region(root, "detail-pane"),
      counts: region(root, "status-counts"),
      statusBar: region(root, "status-bar"),
      exportPane: region(root, "export-pane"),
      reviewerInput: region(root, "reviewer-input"),
      exportForce: region(root, "export-force"),
      exportButton: region(root, "export-button"),
    };
  }

  async start(window_: Window): Promise<void> {
    this.store.subscribe(() => this.render());
    this.wireStaticControls();
    this.unbindKeyboard = bindKeyboard(window_, {
      onNext: () => void this.selectNext(),
      onPrev: () => void this.selectPrev(),
      onReviewer: (id) => this.setReviewer(id),
      onDecisionTrue: () => this.setDecision("true_positive"),
      onDecisionFalse: () => this.setDecision("false_positive"),
      onDigit: (n) => this.applyDigit(n),
      onSubmit: () => void this.submitLabel(),
      onResolveNoConsensus: () => void this.resolveNoConsensus(),
      onExport: () => void this.runExport(),
    });
    await this.refreshItems();
  }

  stop(): void {
    this.unbindKeyboard?.();
    this.unbindKeyboard = null;
  }

  /** Resolves once no action is running; new actions extend the wait. */
  idle(): Promise<void> {
    if (this.inflight === 0) return Promise.resolve();
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  // ---- actions ----

  async refreshItems(): Promise<void> {
    await this.run(async () => {
      const items = await this.client.listItems();
      const index = firstOpenIndex(items);
      this.store.update({ items, message: `${items.length} items loaded` });
      await this.loadSelection(index);
    });
  }

  async selectIndex(index: number): Promise<void> {
    await this.run(() => this.loadSelection(index));
  }

  async selectNext(): Promise<void> {
    await this.run(() => this.loadSelection(movedSelection(this.store.state, 1)));
  }

  async selectPrev(): Promise<void> {
    await this.run(() => this.loadSelection(movedSelection(this.store.state, -1)));
  }

  setReviewer(reviewerId: string): void {
    const id = reviewerId.trim();
    if (id === "") return;
    this.regions.reviewerInput.value = id;
    this.store.update({ reviewerId: id, message: `acting as ${id}` });
  }

  setDecision(decision: Decision): void {
    if (this.store.state.detail === null) return;
    this.store.update({ draft: { ...this.store.state.draft, decision } });
  }

  toggleType(type: string): void {
    const draft = this.store.state.draft;
    const checkedTypes = new Set(draft.checkedTypes);
    const extraTypes = [...draft.extraTypes];
    if (checkedTypes.has(type)) {
      checkedTypes.delete(type);
    } else if (extraTypes.includes(type)) {
      extraTypes.splice(extraTypes.indexOf(type), 1);
    } else {
      checkedTypes.add(type);
    }
    this.store.update({ draft: { ...draft, checkedTypes, extraTypes } });
  }

  addExtraType(type: string): void {
    const cleaned = type.trim().toLowerCase();
    if (cleaned === "") return;
    const draft = this.store.state.draft;
    if (draft.extraTypes.includes(cleaned) || draft.checkedTypes.has(cleaned)) return;
    this.store.update({
      draft: { ...draft, extraTypes: [...draft.extraTypes, cleaned] },
    });
  }

  setFpReason(reason: string): void {
    this.store.update({ draft: { ...this.store.state.draft, fpReason: reason } });
  }

  /**
   * Digit keys edit the active draft: with a true-positive decision they
   * toggle the nth listed type, with a false-positive decision they pick
   * the nth reason.
   */
  applyDigit(n: number): void {
    const state = this.store.state;
    if (state.detail === null) return;
    if (state.draft.decision === "true_positive") {
      const types = state.detail.verdict.pii_types;
      if (n <= types.length) this.toggleType(types[n - 1]);
    } else if (state.draft.decision === "false_positive") {
      if (n <= FP_REASONS.length) this.setFpReason(FP_REASONS[n - 1]);
    }
  }

  async submitLabel(): Promise<void> {
    await this.run(async () => {
      const state = this.store.state;
      const detail = state.detail;
      const decision = state.draft.decision;
      if (detail === null || decision === null) return;
      if (labelFormLocked(detail, state.reviewerId)) {
        this.store.update({
          message: `cannot label: ${state.reviewerId} has no open review here`,
        });
        return;
      }
      const label: LabelSubmission =
        decision === "true_positive"
          ? {
              reviewer_id: state.reviewerId,
              decision,
              corrected_types: draftTypes(state.draft),
            }
          : {
              reviewer_id: state.reviewerId,
              decision,
              corrected_types: [],
              fp_reason: state.draft.fpReason,
            };
      const outcome = await this.client.submitLabel(detail.item_id, label);
      this.store.update({
        message: `label recorded by ${state.reviewerId} — item is ${outcome.status}`,
      });
      await this.reloadDetail(detail.item_id);
    });
  }

  async resolveNoConsensus(): Promise<void> {
    await this.resolve({ consensus: false }, "no consensus: defaulted to false positive");
  }

  async resolveConsensus(decision: Decision): Promise<void> {
    await this.resolve(
      { consensus: true, decision },
      `consensus recorded: ${decision}`,
    );
  }

  private async resolve(
    submission: { consensus: boolean; decision?: Decision },
    message: string,
  ): Promise<void> {
    await this.run(async () => {
      const detail = this.store.state.detail;
      if (detail === null || detail.status !== "labeled") return;
      await this.client.submitResolution(detail.item_id, submission);
      this.store.update({ message });
      await this.reloadDetail(detail.item_id);
    });
  }

  async runExport(): Promise<void> {
    await this.run(async () => {
      const force = this.regions.exportForce.checked;
      const result = await this.client.exportValidated(force);
      this.store.update({
        exportResult: result,
        message: `export ready: ${result.count} validated finding(s)`,
      });
    });
  }

  // ---- internals ----

  private async loadSelection(index: number): Promise<void> {
    const items = this.store.state.items;
    if (index < 0 || index >= items.length) {
      this.store.update({
        selectedIndex: -1,
        detail: null,
        payloads: [],
        draft: emptyDraft(),
      });
      return;
    }
    const itemId = items[index].item_id;
    const [detail, payloads] = await Promise.all([
      this.client.getItem(itemId),
      this.client.getPayloads(itemId),
    ]);
    this.store.update({
      selectedIndex: index,
      detail,
      payloads,
      draft: draftForDetail(detail),
      items: withItem(items, summaryFromDetail(detail)),
    });
  }

  private async reloadDetail(itemId: string): Promise<void> {
    const detail = await this.client.getItem(itemId);
    this.store.update({
      detail,
      draft: draftForDetail(detail),
      items: withItem(this.store.state.items, summaryFromDetail(detail)),
    });
  }

  private async run(action: () => Promise<void> | void): Promise<void> {
    this.inflight += 1;
    this.store.update({ busy: true });
    try {
      await action();
    } catch (error) {
      this.store.update({ message: describeError(error) });
    } finally {
      this.inflight -= 1;
      if (this.inflight === 0) {
        this.store.update({ busy: false });
        const waiters = this.idleWaiters;
        this.idleWaiters = [];
        for (const waiter of waiters) waiter();
      }
    }
  }

  private wireStaticControls(): void {
    this.regions.reviewerInput.addEventListener("change", () => {
      this.setReviewer(this.regions.reviewerInput.value);
    });
    this.regions.exportButton.addEventListener("click", () => {
      void this.runExport();
    });

    const header = this.regions.reviewerInput.closest(".topbar");
    header?.addEventListener("click", (event) => {
      const button = actionTarget(event);
      if (button === null) return;
      const action = button.dataset.action;
      if (action === "reviewer-a") this.setReviewer("reviewer-a");
      else if (action === "reviewer-b") this.setReviewer("reviewer-b");
    });

    this.regions.list.addEventListener("click", (event) => {
      const row =
        event.target instanceof Element
          ? event.target.closest<HTMLElement>("[data-index]")
          : null;
      if (row === null) return;
      const index = Number(row.dataset.index);
      if (Number.isInteger(index)) void this.selectIndex(index);
    });

    this.regions.detail.addEventListener("click", (event) => {
      const button = actionTarget(event);
      if (button === null) return;
      switch (button.dataset.action) {
        case "decision-true":
          this.setDecision("true_positive");
          break;
        case "decision-false":
          this.setDecision("false_positive");
          break;
        case "submit-label":
          void this.submitLabel();
          break;
        case "resolve-default":
          void this.resolveNoConsensus();
          break;
        case "resolve-consensus-tp":
          void this.resolveConsensus("true_positive");
          break;
        case "resolve-consensus-fp":
          void this.resolveConsensus("false_positive");
          break;
        case "add-extra-type": {
          const input =
            this.regions.detail.querySelector<HTMLInputElement>("#extra-type");
          if (input !== null) this.addExtraType(input.value);
          break;
        }
      }
    });

    this.regions.detail.addEventListener("change", (event) => {
      const target = event.target;
      if (!(target instanceof HTMLElement)) return;
      if (target instanceof HTMLInputElement && target.dataset.type) {
        this.toggleType(target.dataset.type);
      } else if (target instanceof HTMLSelectElement && target.id === "fp-reason") {
        this.setFpReason(target.value);
      }
    });
  }

  private render(): void {
    const state = this.store.state;
    renderList(this.regions.list, state.items, state.selectedIndex);
    renderCounts(this.regions.counts, countByStatus(state.items));
    renderDetail(this.regions.detail, state, (id) => this.client.imageUrl(id));
    renderExport(this.regions.exportPane, state.exportResult);
    renderStatusBar(this.regions.statusBar, state.message, state.busy);
  }
}

function actionTarget(event: Event): HTMLElement | null {
  return event.target instanceof Element
    ? event.target.closest<HTMLElement>("[data-action]")
    : null;
}

export function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return error.status === 0 ? error.detail : `rejected (${error.status}): ${error.detail}`;
  }
  return String(error);
}
