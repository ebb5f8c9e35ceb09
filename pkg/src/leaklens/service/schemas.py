"""Request/response models for the triage review API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..detection import PiiVerdict
from ..triage import Resolution, ReviewItem, ReviewLabel


class VerdictModel(BaseModel):
    item_id: str
    stage: Literal["ui", "json"]
    flagged: bool
    pii_types: list[str]
    parse_status: str
    raw_output: str
    examples_by_type: dict[str, str] | None = None
    prompts_hash: str = ""
    adapter: str = ""

    @classmethod
    def from_verdict(cls, verdict: PiiVerdict) -> "VerdictModel":
        return cls(
            item_id=verdict.item_id,
            stage=verdict.stage,
            flagged=verdict.flagged,
            pii_types=sorted(verdict.pii_types),
            parse_status=verdict.parse_status,
            raw_output=verdict.raw_output,
            examples_by_type=verdict.examples_by_type,
            prompts_hash=verdict.prompts_hash,
            adapter=verdict.adapter,
        )


class LabelModel(BaseModel):
    reviewer_id: str
    decision: str
    corrected_types: list[str]
    fp_reason: str | None = None
    noted_at: str

    @classmethod
    def from_label(cls, label: ReviewLabel) -> "LabelModel":
        row = label.to_row()
        return cls(
            reviewer_id=row["reviewer_id"],
            decision=row["decision"],
            corrected_types=row["corrected_types"],
            fp_reason=row["fp_reason"],
            noted_at=row["noted_at"],
        )


class ResolutionModel(BaseModel):
    item_id: str
    final_decision: str
    final_types: list[str]
    method: str

    @classmethod
    def from_resolution(cls, resolution: Resolution) -> "ResolutionModel":
        return cls(
            item_id=resolution.item_id,
            final_decision=resolution.final_decision,
            final_types=sorted(resolution.final_types),
            method=resolution.method,
        )


class ItemSummary(BaseModel):
    item_id: str
    stage: str
    bundle_id: str
    status: str
    pii_types: list[str]
    parse_status: str
    labels: int
    resolved: bool

    @classmethod
    def from_item(cls, item: ReviewItem) -> "ItemSummary":
        return cls(
            item_id=item.item_id,
            stage=item.stage,
            bundle_id=item.bundle_id,
            status=item.status,
            pii_types=sorted(item.verdict.pii_types),
            parse_status=item.verdict.parse_status,
            labels=len(item.labels),
            resolved=item.resolution is not None,
        )


class ItemDetail(BaseModel):
    item_id: str
    stage: str
    bundle_id: str
    status: str
    domain: str | None = None
    final_url: str | None = None
    has_image: bool = False
    verdict: VerdictModel
    labels: list[LabelModel]
    resolution: ResolutionModel | None = None


class LabelRequest(BaseModel):
    reviewer_id: str = Field(min_length=1)
    decision: Literal["true_positive", "false_positive"]
    corrected_types: list[str] = Field(default_factory=list)
    fp_reason: str | None = None


class LabelResponse(BaseModel):
    item_id: str
    status: str
    resolution: ResolutionModel | None = None


class ResolutionRequest(BaseModel):
    consensus: bool
    decision: Literal["true_positive", "false_positive"] | None = None
    types: list[str] | None = None


class PayloadModel(BaseModel):
    source: str
    content_hash: str
    origin_locator: str
    json_text: str


class ValidatedRow(BaseModel):
    bundle_id: str
    item_id: str
    stage: str
    pii_types: list[str]
    domain: str
    final_url: str
    url_id: str


class ExportResponse(BaseModel):
    count: int
    validated: list[ValidatedRow]
