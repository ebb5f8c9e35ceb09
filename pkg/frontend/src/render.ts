/**
 * DOM rendering for the review UI.
 *
 * Pure view code: every function projects a slice of state into a
 * container it fully owns.  All text lands via textContent, so payloads
 * and detector output can never inject markup.  Interactive elements
 * carry data-action attributes; the controller handles them through
 * event delegation.
 */

import type { AppState, ReviewCounts } from "./state.js";
import { draftTypes, labelFormLocked } from "./state.js";
import { FP_REASONS } from "./types.js";
import type { ExportResult, ItemDetail, ItemSummary } from "./types.js";

type Child = Node | string;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function chip(text: string, extraClass = ""): HTMLElement {
  return el("span", { class: `chip ${extraClass}`.trim() }, text);
}

function statusChip(status: string): HTMLElement {
  return chip(status, `status-${status}`);
}

// ---- item list ----

export function renderList(
  container: HTMLElement,
  items: ItemSummary[],
  selectedIndex: number,
): void {
  container.textContent = "";
  items.forEach((item, index) => {
    const row = el(
      "li",
      {
        class: "item-row",
        role: "option",
        "data-item-id": item.item_id,
        "data-index": String(index),
        "aria-selected": index === selectedIndex ? "true" : "false",
      },
      el(
        "div",
        { class: "row-head" },
        item.item_id,
        chip(item.stage),
        statusChip(item.status),
      ),
      el(
        "div",
        { class: "row-types" },
        item.pii_types.length > 0 ? item.pii_types.join(", ") : "(no types)",
      ),
    );
    container.append(row);
  });
}

// ---- status line ----

export function renderCounts(container: HTMLElement, counts: ReviewCounts): void {
  container.textContent =
    `${counts.total} items — ${counts.pending} pending, ` +
    `${counts.conflicts} in conflict, ${counts.resolved} resolved`;
}

export function renderStatusBar(
  container: HTMLElement,
  message: string,
  busy: boolean,
): void {
  container.textContent = message;
  container.classList.toggle("busy", busy);
}

// ---- detail pane ----

export function renderDetail(
  container: HTMLElement,
  state: AppState,
  imageUrl: (itemId: string) => string,
): void {
  container.textContent = "";
  const detail = state.detail;
  if (detail === null) {
    container.append(el("p", { class: "locked-note" }, "No item selected."));
    return;
  }

  container.append(
    el(
      "div",
      { class: "detail-head" },
      el("h2", {}, detail.item_id),
      chip(detail.stage),
      statusChip(detail.status),
    ),
    el(
      "p",
      { class: "detail-meta" },
      `${detail.domain ?? "unknown domain"} — ${detail.final_url ?? "no URL"}`,
    ),
  );

  if (detail.has_image) {
    container.append(
      el("img", {
        class: "shot",
        id: "shot",
        alt: `Captured page for ${detail.item_id}`,
        src: imageUrl(detail.item_id),
      }),
    );
  }

  container.append(verdictCard(detail));
  if (state.payloads.length > 0) container.append(payloadsCard(state));
  if (detail.labels.length > 0) container.append(labelsCard(detail));

  if (detail.resolution !== null) {
    container.append(resolutionCard(detail));
  } else if (detail.status === "labeled") {
    container.append(conflictCard());
  }
  if (detail.resolution === null) {
    container.append(labelFormCard(state, detail));
  }
}

function verdictCard(detail: ItemDetail): HTMLElement {
  const verdict = detail.verdict;
  const chips = el("div", { class: "type-chips" });
  for (const type of verdict.pii_types) chips.append(chip(type));

  const card = el(
    "div",
    { class: "card", id: "verdict-card" },
    el("h3", {}, "Detector verdict"),
    chips,
    el(
      "p",
      { class: "detail-meta" },
      `parse: ${verdict.parse_status} — adapter: ${verdict.adapter || "unknown"}`,
    ),
  );

  const examples = verdict.examples_by_type;
  if (examples && Object.keys(examples).length > 0) {
    const table = el("table", { class: "plain" });
    for (const [type, example] of Object.entries(examples)) {
      table.append(el("tr", {}, el("th", {}, type), el("td", {}, example)));
    }
    card.append(table);
  }

  card.append(
    el(
      "details",
      {},
      el("summary", {}, "Raw detector output"),
      el("pre", { class: "raw-output" }, verdict.raw_output),
    ),
  );
  return card;
}

function payloadsCard(state: AppState): HTMLElement {
  const card = el(
    "div",
    { class: "card", id: "payloads-card" },
    el("h3", {}, `Captured payloads (${state.payloads.length})`),
  );
  for (const payload of state.payloads) {
    card.append(
      el(
        "details",
        {},
        el("summary", {}, `${payload.source} — ${payload.origin_locator}`),
        el("pre", { class: "payload-body" }, payload.json_text),
      ),
    );
  }
  return card;
}

function labelsCard(detail: ItemDetail): HTMLElement {
  const table = el(
    "table",
    { class: "plain" },
    el(
      "tr",
      {},
      el("th", {}, "Reviewer"),
      el("th", {}, "Decision"),
      el("th", {}, "Types"),
      el("th", {}, "Reason"),
    ),
  );
  for (const label of detail.labels) {
    table.append(
      el(
        "tr",
        { "data-reviewer": label.reviewer_id },
        el("td", {}, label.reviewer_id),
        el("td", {}, label.decision),
        el("td", {}, label.corrected_types.join(", ")),
        el("td", {}, label.fp_reason ?? ""),
      ),
    );
  }
  return el(
    "div",
    { class: "card", id: "labels-card" },
    el("h3", {}, `Labels (${detail.labels.length} of 2)`),
    table,
  );
}

function resolutionCard(detail: ItemDetail): HTMLElement {
  const resolution = detail.resolution!;
  const typeText =
    resolution.final_types.length > 0
      ? resolution.final_types.join(", ")
      : "(none)";
  return el(
    "div",
    { class: "card resolution-box", id: "resolution-card" },
    el("h3", {}, "Resolution"),
    el(
      "p",
      { class: "final" },
      `${resolution.final_decision} via ${resolution.method}`,
    ),
    el("p", {}, `Final types: ${typeText}`),
  );
}

function conflictCard(): HTMLElement {
  return el(
    "div",
    { class: "card conflict-box", id: "conflict-card" },
    el("div", { class: "banner" }, "Reviewers disagree — resolve below"),
    el(
      "div",
      { class: "resolve-row" },
      el(
        "button",
        {
          type: "button",
          id: "resolve-default",
          class: "danger",
          "data-action": "resolve-default",
          "aria-keyshortcuts": "u",
        },
        "No consensus — default false positive",
      ),
      el(
        "button",
        {
          type: "button",
          id: "resolve-consensus-tp",
          "data-action": "resolve-consensus-tp",
        },
        "Consensus: true positive",
      ),
      el(
        "button",
        {
          type: "button",
          id: "resolve-consensus-fp",
          "data-action": "resolve-consensus-fp",
        },
        "Consensus: false positive",
      ),
    ),
    el(
      "p",
      { class: "help" },
      "Without a documented consensus the item is discarded as a false positive.",
    ),
  );
}

function labelFormCard(state: AppState, detail: ItemDetail): HTMLElement {
  const card = el("div", { class: "card", id: "label-form" });
  card.append(el("h3", {}, `Label as ${state.reviewerId}`));

  if (labelFormLocked(detail, state.reviewerId)) {
    const note =
      detail.status === "labeled"
        ? "Labeling is closed: both reviews are in."
        : `${state.reviewerId} already labeled this item; ` +
          "switch reviewer to add the second review.";
    card.append(el("p", { class: "locked-note" }, note));
    return card;
  }

  const decision = state.draft.decision;
  card.append(
    el(
      "div",
      { class: "decision-row" },
      el(
        "button",
        {
          type: "button",
          id: "decision-true",
          "data-action": "decision-true",
          "aria-keyshortcuts": "t",
          "aria-pressed": decision === "true_positive" ? "true" : "false",
        },
        "True positive",
      ),
      el(
        "button",
        {
          type: "button",
          id: "decision-false",
          "data-action": "decision-false",
          "aria-keyshortcuts": "f",
          "aria-pressed": decision === "false_positive" ? "true" : "false",
        },
        "False positive",
      ),
    ),
  );

  if (decision === "true_positive") {
    card.append(typePicker(state, detail));
  } else if (decision === "false_positive") {
    card.append(reasonPicker(state));
  }

  const submit = el(
    "button",
    {
      type: "button",
      id: "submit-label",
      "data-action": "submit-label",
      "aria-keyshortcuts": "s",
    },
    "Submit label",
  );
  if (decision === null) submit.setAttribute("disabled", "");
  card.append(
    submit,
    el(
      "p",
      { class: "help" },
      el("kbd", {}, "t"),
      " / ",
      el("kbd", {}, "f"),
      " pick a decision, ",
      el("kbd", {}, "1"),
      "–",
      el("kbd", {}, "9"),
      " adjust, ",
      el("kbd", {}, "s"),
      " submits.",
    ),
  );
  return card;
}

function typePicker(state: AppState, detail: ItemDetail): HTMLElement {
  const picker = el("div", { class: "type-pick", id: "type-picker" });
  const known = [...detail.verdict.pii_types];
  for (const extra of state.draft.extraTypes) {
    if (!known.includes(extra)) known.push(extra);
  }
  known.forEach((type, index) => {
    const box = el("input", {
      type: "checkbox",
      "data-type": type,
      "aria-label": `PII type ${type}`,
    });
    if (state.draft.checkedTypes.has(type) || state.draft.extraTypes.includes(type)) {
      box.checked = true;
    }
    const hint =
      index < 9 ? el("span", { class: "hint" }, String(index + 1)) : "";
    picker.append(el("label", {}, box, type, hint));
  });
  picker.append(
    el(
      "div",
      { class: "extra-row" },
      el("input", {
        type: "text",
        id: "extra-type",
        placeholder: "add another type…",
        "aria-label": "Additional PII type",
      }),
      el(
        "button",
        { type: "button", "data-action": "add-extra-type" },
        "Add",
      ),
    ),
    el(
      "p",
      { class: "help" },
      `Submitting as: ${draftTypes(state.draft).join(", ") || "(none)"}`,
    ),
  );
  return picker;
}

function reasonPicker(state: AppState): HTMLElement {
  const select = el("select", { id: "fp-reason", "aria-label": "False positive reason" });
  FP_REASONS.forEach((reason, index) => {
    const option = el("option", { value: reason }, `${index + 1}. ${reason}`);
    if (reason === state.draft.fpReason) option.setAttribute("selected", "");
    select.append(option);
  });
  return el(
    "div",
    { class: "reason-row" },
    el("label", { for: "fp-reason" }, "Reason"),
    select,
  );
}

// ---- export pane ----

export function renderExport(
  container: HTMLElement,
  result: ExportResult | null,
): void {
  container.textContent = "";
  if (result === null) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.append(
    el("h3", {}, `Validated findings: ${result.count}`),
  );
  if (result.count === 0) return;
  const table = el(
    "table",
    { class: "plain", id: "export-table" },
    el(
      "tr",
      {},
      el("th", {}, "Item"),
      el("th", {}, "Domain"),
      el("th", {}, "Stage"),
      el("th", {}, "PII types"),
    ),
  );
  for (const row of result.validated) {
    table.append(
      el(
        "tr",
        { "data-item-id": row.item_id },
        el("td", {}, row.item_id),
        el("td", {}, row.domain),
        el("td", {}, row.stage),
        el("td", {}, row.pii_types.join(", ")),
      ),
    );
  }
  container.append(table);
}
