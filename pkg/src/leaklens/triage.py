"""Hierarchical screen-then-review workflow and two-reviewer triage state.

Stage 1 screens UI text; flagged items go to human review.  Bundles whose
UI was rejected in review or never flagged fall through to Stage 2, which
screens their JSON payloads; flagged payload sets go to review as well.
A bundle validated in Stage 1 is never JSON-screened.  Exactly two
reviewers label each flagged item; agreement auto-resolves, disagreement
queues the item for discussion, and a discussion without consensus
resolves to false positive so the validated set never overestimates.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .adapters import DetectorAdapter
from .capture import ArtifactBundle, BundleStore
from .detection import (
    FuzzyConfig,
    PiiVerdict,
    _STATUS_RANK,
    screen_payload,
    screen_ui,
)
from .extraction import PayloadIndex, TextExtractionAdapter, resolve_ui_text
from .lexicon import Lexicon
from .util import atomic_write, format_timestamp, parse_timestamp, utcnow

logger = logging.getLogger(__name__)

DECISIONS = ("true_positive", "false_positive")
FP_REASONS = (
    "pii_asking_page",
    "sample_demo_content",
    "public_or_company_info",
    "keyword_match",
    "misclassification",
)
RESOLUTION_METHODS = ("agreement", "discussion", "default_false_positive")
ITEM_STATUSES = ("pending", "labeled", "resolved")
REQUIRED_REVIEWERS = 2


class TriageError(ValueError):
    pass


class NotFoundError(TriageError):
    pass


class ConflictError(TriageError):
    pass


# ============================================================
# Types
# ============================================================


@dataclass
class ReviewLabel:
    item_id: str
    reviewer_id: str
    decision: str
    corrected_types: set[str] = field(default_factory=set)
    fp_reason: str | None = None
    noted_at: datetime = field(default_factory=utcnow)

    def validate(self, lexicon: Lexicon | None = None) -> None:
        if self.decision not in DECISIONS:
            raise TriageError(f"unknown decision {self.decision!r}")
        if self.decision == "false_positive":
            if self.fp_reason not in FP_REASONS:
                raise TriageError(
                    f"false_positive label requires fp_reason from {FP_REASONS}")
            if self.corrected_types:
                raise TriageError("corrected_types apply to true_positive labels only")
        else:
            if self.fp_reason is not None:
                raise TriageError("fp_reason applies to false_positive labels only")
            if lexicon is not None:
                unknown = {t for t in self.corrected_types if t not in lexicon}
                if unknown:
                    raise TriageError(f"corrected_types outside lexicon: {sorted(unknown)}")

    def to_row(self) -> dict:
        return {
            "item_id": self.item_id,
            "reviewer_id": self.reviewer_id,
            "decision": self.decision,
            "corrected_types": sorted(self.corrected_types),
            "fp_reason": self.fp_reason,
            "noted_at": format_timestamp(self.noted_at),
        }

    @classmethod
    def from_row(cls, row: dict) -> "ReviewLabel":
        return cls(
            item_id=row["item_id"],
            reviewer_id=row["reviewer_id"],
            decision=row["decision"],
            corrected_types=set(row.get("corrected_types", [])),
            fp_reason=row.get("fp_reason"),
            noted_at=parse_timestamp(row["noted_at"]),
        )


@dataclass
class Resolution:
    item_id: str
    final_decision: str
    final_types: set[str]
    method: str

    def to_row(self) -> dict:
        return {
            "item_id": self.item_id,
            "final_decision": self.final_decision,
            "final_types": sorted(self.final_types),
            "method": self.method,
        }

    @classmethod
    def from_row(cls, row: dict) -> "Resolution":
        return cls(row["item_id"], row["final_decision"],
                   set(row.get("final_types", [])), row["method"])


@dataclass
class ReviewItem:
    item_id: str
    stage: str  # ui | json
    bundle_id: str
    verdict: PiiVerdict
    status: str = "pending"
    labels: list[ReviewLabel] = field(default_factory=list)
    resolution: Resolution | None = None

    def label_by(self, reviewer_id: str) -> ReviewLabel | None:
        for label in self.labels:
            if label.reviewer_id == reviewer_id:
                return label
        return None

    def to_row(self) -> dict:
        return {
            "item_id": self.item_id,
            "stage": self.stage,
            "bundle_id": self.bundle_id,
            "verdict": self.verdict.to_row(),
            "status": self.status,
            "labels": [l.to_row() for l in self.labels],
            "resolution": self.resolution.to_row() if self.resolution else None,
        }

    @classmethod
    def from_row(cls, row: dict) -> "ReviewItem":
        return cls(
            item_id=row["item_id"],
            stage=row["stage"],
            bundle_id=row["bundle_id"],
            verdict=PiiVerdict.from_row(row["verdict"]),
            status=row["status"],
            labels=[ReviewLabel.from_row(l) for l in row.get("labels", [])],
            resolution=Resolution.from_row(row["resolution"]) if row.get("resolution") else None,
        )


# ============================================================
# Triage store
# ============================================================


class TriageStore:
    """Review items, labels, and resolutions, persisted as one JSON file."""

    def __init__(self, path: Path | str, lexicon: Lexicon | None = None):
        self.path = Path(path)
        self.lexicon = lexicon
        self._items: dict[str, ReviewItem] = {}
        self._order: list[str] = []
        self._load()

    def _load(self) -> None:
        if not self.path.is_file():
            return
        data = json.loads(self.path.read_text("utf-8"))
        for item_id in data["order"]:
            self._items[item_id] = ReviewItem.from_row(data["items"][item_id])
            self._order.append(item_id)

    def save(self) -> None:
        data = {
            "order": self._order,
            "items": {item_id: self._items[item_id].to_row() for item_id in self._order},
        }
        atomic_write(self.path, json.dumps(data, ensure_ascii=False, indent=1, sort_keys=True))

    # ---- items ----

    def ensure_item(self, item: ReviewItem) -> ReviewItem:
        """Register a flagged verdict for review; no-op if already present."""
        if not item.verdict.flagged:
            raise TriageError("only flagged verdicts become review items")
        existing = self._items.get(item.item_id)
        if existing is not None:
            return existing
        self._items[item.item_id] = item
        self._order.append(item.item_id)
        return item

    def get(self, item_id: str) -> ReviewItem:
        item = self._items.get(item_id)
        if item is None:
            raise NotFoundError(f"no such review item: {item_id}")
        return item

    def items(self, stage: str | None = None, status: str | None = None) -> list[ReviewItem]:
        out = [self._items[i] for i in self._order]
        if stage:
            out = [i for i in out if i.stage == stage]
        if status:
            out = [i for i in out if i.status == status]
        return out

    # ---- labeling ----

    def submit_label(self, label: ReviewLabel) -> str:
        """Persist one reviewer's label; auto-resolve on agreement.

        Returns the item's status afterwards.
        """
        item = self.get(label.item_id)
        label.validate(self.lexicon)
        if item.resolution is not None:
            raise ConflictError(f"{item.item_id} is already resolved")
        if item.label_by(label.reviewer_id) is not None:
            raise ConflictError(
                f"reviewer {label.reviewer_id} already labeled {item.item_id}")
        if len(item.labels) >= REQUIRED_REVIEWERS:
            raise ConflictError(f"{item.item_id} already has two labels")
        if label.decision == "true_positive" and not label.corrected_types:
            # Reviewer accepted the detector's types unchanged.
            label.corrected_types = set(item.verdict.pii_types)
        item.labels.append(label)

        if len(item.labels) == REQUIRED_REVIEWERS:
            first, second = item.labels
            if self._labels_agree(first, second):
                final_types = set(first.corrected_types) if first.decision == "true_positive" else set()
                item.resolution = Resolution(item.item_id, first.decision,
                                             final_types, "agreement")
                item.status = "resolved"
            else:
                item.status = "labeled"  # conflict: awaiting discussion
        self.save()
        return item.status

    @staticmethod
    def _labels_agree(a: ReviewLabel, b: ReviewLabel) -> bool:
        if a.decision != b.decision:
            return False
        if a.decision == "true_positive":
            return a.corrected_types == b.corrected_types
        return True

    def resolve(self, item_id: str, consensus: bool,
                decision: str | None = None,
                types: set[str] | None = None) -> Resolution:
        """Record a discussion outcome for a disagreeing item.

        With consensus, the agreed decision (and types, for a true
        positive) is final with method=discussion; without consensus the
        item resolves to false positive with method=default_false_positive.
        """
        item = self.get(item_id)
        if item.resolution is not None:
            raise ConflictError(f"{item_id} is already resolved")
        if item.status != "labeled":
            raise ConflictError(f"{item_id} has no label conflict to resolve")

        if not consensus:
            item.resolution = Resolution(item_id, "false_positive", set(), "default_false_positive")
        else:
            if decision not in DECISIONS:
                raise TriageError("consensus resolution requires a decision")
            if decision == "true_positive":
                if types is None:
                    types = set().union(*(
                        l.corrected_types for l in item.labels
                        if l.decision == "true_positive"
                    )) or set(item.verdict.pii_types)
                if self.lexicon is not None:
                    unknown = {t for t in types if t not in self.lexicon}
                    if unknown:
                        raise TriageError(f"types outside lexicon: {sorted(unknown)}")
            else:
                types = set()
            item.resolution = Resolution(item_id, decision, set(types), "discussion")
        item.status = "resolved"
        self.save()
        return item.resolution


# ============================================================
# Hierarchy runner
# ============================================================


@dataclass
class BundleTrace:
    bundle_id: str
    has_ui_text: bool = False
    ui_flagged: bool | None = None
    ui_decision: str | None = None
    json_screened: bool = False
    json_flagged: bool | None = None
    json_decision: str | None = None
    final: str = "rejected"  # validated_ui | validated_json | rejected | pending_ui | pending_json | no_artifacts


@dataclass
class ValidatedRecord:
    bundle_id: str
    item_id: str
    stage: str
    pii_types: set[str]
    domain: str
    final_url: str
    url_id: str

    def to_row(self) -> dict:
        return {
            "bundle_id": self.bundle_id,
            "item_id": self.item_id,
            "stage": self.stage,
            "pii_types": sorted(self.pii_types),
            "domain": self.domain,
            "final_url": self.final_url,
            "url_id": self.url_id,
        }


@dataclass
class HierarchyResult:
    validated: list[ValidatedRecord]
    pending: list[str]
    traces: dict[str, BundleTrace]
    ui_verdicts: dict[str, PiiVerdict] = field(default_factory=dict)       # bundle item id -> verdict
    payload_verdicts: dict[str, PiiVerdict] = field(default_factory=dict)  # payload item id -> verdict
    no_artifact_bundles: list[str] = field(default_factory=list)


def ui_item_id(bundle_id: str) -> str:
    return f"{bundle_id}:ui"


def json_item_id(bundle_id: str) -> str:
    return f"{bundle_id}:json"


def merge_payload_verdicts(item_id: str, verdicts: list[PiiVerdict]) -> PiiVerdict:
    """Bundle-level JSON verdict: union of the bundle's payload verdicts."""
    flagged = any(v.flagged for v in verdicts)
    types: set[str] = set()
    examples: dict[str, str] = {}
    status = "exact"
    for v in verdicts:
        types |= v.pii_types
        for label, example in (v.examples_by_type or {}).items():
            examples.setdefault(label, example)
        if _STATUS_RANK[v.parse_status] > _STATUS_RANK[status]:
            status = v.parse_status
    return PiiVerdict(
        item_id=item_id,
        stage="json",
        flagged=flagged,
        pii_types=types,
        raw_output="\n".join(v.raw_output for v in verdicts),
        parse_status=status,
        examples_by_type=examples or None,
        adapter=verdicts[0].adapter if verdicts else "",
    )


def run_hierarchy(bundle_store: BundleStore, payload_index: PayloadIndex,
                  lexicon: Lexicon, adapter: DetectorAdapter,
                  triage_store: TriageStore,
                  text_adapter: TextExtractionAdapter | None = None,
                  fuzzy: FuzzyConfig = FuzzyConfig(),
                  chunk_size: int | None = None) -> HierarchyResult:
    """Run the two-stage screen/review routing over all retained bundles.

    Screening results are cached per unique UI text and per payload, so
    re-running is idempotent and never re-invokes the adapter for content
    it has seen.  Review decisions gate the routing: unresolved flagged
    items leave their bundle pending.
    """
    from .detection import CHUNK_SIZE

    chunk_size = chunk_size or CHUNK_SIZE
    result = HierarchyResult(validated=[], pending=[], traces={})
    text_cache: dict[str, PiiVerdict] = {}

    for bundle in bundle_store.retained():
        trace = BundleTrace(bundle_id=bundle.bundle_id)
        result.traces[bundle.bundle_id] = trace
        if not bundle.has_any_artifact:
            trace.final = "no_artifacts"
            result.no_artifact_bundles.append(bundle.bundle_id)
            continue

        # ---- Stage 1: UI text ----
        resolution = resolve_ui_text(bundle, text_adapter)
        ui_text = resolution.ui_text.text if resolution.status == "ok" else ""
        trace.has_ui_text = bool(ui_text.strip())

        if trace.has_ui_text:
            item_id = ui_item_id(bundle.bundle_id)
            verdict = _screen_ui_cached(ui_text, lexicon, adapter, item_id,
                                        fuzzy, text_cache)
            result.ui_verdicts[item_id] = verdict
            trace.ui_flagged = verdict.flagged
            if verdict.flagged:
                item = triage_store.ensure_item(
                    ReviewItem(item_id, "ui", bundle.bundle_id, verdict))
                if item.resolution is None:
                    trace.final = "pending_ui"
                    result.pending.append(item_id)
                    continue
                trace.ui_decision = item.resolution.final_decision
                if item.resolution.final_decision == "true_positive":
                    trace.final = "validated_ui"
                    result.validated.append(ValidatedRecord(
                        bundle.bundle_id, item_id, "ui",
                        set(item.resolution.final_types),
                        bundle.domain, bundle.final_url, bundle.url_id,
                    ))
                    continue  # validated in Stage 1: never JSON-screened
                # Rejected in UI review: falls through to Stage 2.

        # ---- Stage 2: JSON payloads ----
        payloads = payload_index.payloads_for(bundle.bundle_id)
        if not payloads:
            trace.final = "rejected"
            continue
        trace.json_screened = True
        verdicts = []
        for payload in payloads:
            pid = "p" + payload.content_hash[:12]
            verdict = result.payload_verdicts.get(pid)
            if verdict is None:
                verdict = screen_payload(payload, lexicon, adapter, item_id=pid,
                                         fuzzy=fuzzy, chunk_size=chunk_size)
                result.payload_verdicts[pid] = verdict
            verdicts.append(verdict)
        item_id = json_item_id(bundle.bundle_id)
        merged = merge_payload_verdicts(item_id, verdicts)
        trace.json_flagged = merged.flagged
        if not merged.flagged:
            trace.final = "rejected"
            continue
        item = triage_store.ensure_item(
            ReviewItem(item_id, "json", bundle.bundle_id, merged))
        if item.resolution is None:
            trace.final = "pending_json"
            result.pending.append(item_id)
            continue
        trace.json_decision = item.resolution.final_decision
        if item.resolution.final_decision == "true_positive":
            trace.final = "validated_json"
            result.validated.append(ValidatedRecord(
                bundle.bundle_id, item_id, "json",
                set(item.resolution.final_types),
                bundle.domain, bundle.final_url, bundle.url_id,
            ))
        else:
            trace.final = "rejected"

    triage_store.save()
    return result


def _screen_ui_cached(text: str, lexicon: Lexicon, adapter: DetectorAdapter,
                      item_id: str, fuzzy: FuzzyConfig,
                      cache: dict[str, PiiVerdict]) -> PiiVerdict:
    from .util import sha256_hex

    key = sha256_hex(text)
    cached = cache.get(key)
    if cached is not None:
        verdict = PiiVerdict(**{**cached.__dict__, "item_id": item_id})
        verdict.pii_types = set(cached.pii_types)
        return verdict
    verdict = screen_ui(text, lexicon, adapter, item_id=item_id, fuzzy=fuzzy)
    cache[key] = verdict
    return verdict


# ============================================================
# Export
# ============================================================


def export_validated(result: HierarchyResult, out_path: Path | str,
                     force: bool = False) -> list[dict]:
    """Write the validated set as JSONL, one record per true-positive item."""
    if result.pending and not force:
        raise TriageError(
            "pending review items block export: " + ", ".join(sorted(result.pending)))
    rows = sorted((r.to_row() for r in result.validated), key=lambda r: r["bundle_id"])
    from .util import write_jsonl

    write_jsonl(out_path, rows)
    return rows


def apply_scripted_labels(store: TriageStore, script: dict) -> dict:
    """Apply a reviewer script: {"labels": [...], "resolutions": [...]}.

    Labels reference items by id; entries for items that do not exist
    (e.g., a detector change unflagged them) are skipped with a count.
    """
    applied = {"labels": 0, "resolutions": 0, "skipped": 0}
    for row in script.get("labels", []):
        try:
            label = ReviewLabel(
                item_id=row["item_id"],
                reviewer_id=row["reviewer_id"],
                decision=row["decision"],
                corrected_types=set(row.get("corrected_types", [])),
                fp_reason=row.get("fp_reason"),
            )
            store.submit_label(label)
            applied["labels"] += 1
        except NotFoundError:
            applied["skipped"] += 1
        except ConflictError:
            applied["skipped"] += 1  # idempotent re-apply
    for row in script.get("resolutions", []):
        try:
            store.resolve(
                row["item_id"],
                consensus=bool(row.get("consensus", False)),
                decision=row.get("decision"),
                types=set(row["types"]) if row.get("types") is not None else None,
            )
            applied["resolutions"] += 1
        except (NotFoundError, ConflictError):
            applied["skipped"] += 1
    return applied
