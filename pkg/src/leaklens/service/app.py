"""Review API over a workspace: list, inspect, label, resolve, export.

Serves the two-reviewer triage workflow to a local UI.  Intended to bind
to loopback only — it exposes unredacted artifacts and has no
authentication; reviewer identity is supplied per request.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse

from ..capture import BundleStore
from ..extraction import PayloadIndex
from ..lexicon import load_lexicon
from ..triage import (
    ConflictError,
    NotFoundError,
    ReviewLabel,
    TriageError,
    TriageStore,
)
from ..workspace import Workspace
from .schemas import (
    ExportResponse,
    ItemDetail,
    ItemSummary,
    LabelModel,
    LabelRequest,
    LabelResponse,
    PayloadModel,
    ResolutionModel,
    ResolutionRequest,
    ValidatedRow,
    VerdictModel,
)

logger = logging.getLogger(__name__)


def create_app(workspace_root: Path | str) -> FastAPI:
    workspace = Workspace(Path(workspace_root))
    lexicon = load_lexicon()
    triage = TriageStore(workspace.triage_path, lexicon)
    bundles = BundleStore(workspace.root)
    payloads = PayloadIndex(workspace.payloads_path)

    app = FastAPI(title="leaklens triage", version="1.0")

    def get_item(item_id: str):
        try:
            return triage.get(item_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/items", response_model=list[ItemSummary])
    def list_items(stage: str | None = Query(default=None),
                   status: str | None = Query(default=None)) -> list[ItemSummary]:
        return [ItemSummary.from_item(i) for i in triage.items(stage, status)]

    @app.get("/items/{item_id}", response_model=ItemDetail)
    def item_detail(item_id: str) -> ItemDetail:
        item = get_item(item_id)
        bundle = bundles.get(item.bundle_id)
        return ItemDetail(
            item_id=item.item_id,
            stage=item.stage,
            bundle_id=item.bundle_id,
            status=item.status,
            domain=bundle.domain if bundle else None,
            final_url=bundle.final_url if bundle else None,
            has_image=bool(bundle and bundle.ui_image_path),
            verdict=VerdictModel.from_verdict(item.verdict),
            labels=[LabelModel.from_label(l) for l in item.labels],
            resolution=(ResolutionModel.from_resolution(item.resolution)
                        if item.resolution else None),
        )

    @app.get("/items/{item_id}/image")
    def item_image(item_id: str) -> FileResponse:
        item = get_item(item_id)
        bundle = bundles.get(item.bundle_id)
        if bundle is None or not bundle.ui_image_path:
            raise HTTPException(status_code=404, detail="no UI image for this item")
        path = Path(bundle.ui_image_path)
        if not path.is_file():
            raise HTTPException(status_code=404, detail="UI image file missing")
        return FileResponse(path, media_type="image/png")

    @app.get("/items/{item_id}/payloads", response_model=list[PayloadModel])
    def item_payloads(item_id: str) -> list[PayloadModel]:
        item = get_item(item_id)
        return [
            PayloadModel(
                source=p.source,
                content_hash=p.content_hash,
                origin_locator=p.origin_locator,
                json_text=p.canonical_text,
            )
            for p in payloads.payloads_for(item.bundle_id)
        ]

    @app.post("/items/{item_id}/labels", response_model=LabelResponse)
    def submit_label(item_id: str, request: LabelRequest) -> LabelResponse:
        item = get_item(item_id)
        label = ReviewLabel(
            item_id=item.item_id,
            reviewer_id=request.reviewer_id,
            decision=request.decision,
            corrected_types=set(request.corrected_types),
            fp_reason=request.fp_reason,
        )
        try:
            status = triage.submit_label(label)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except TriageError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return LabelResponse(
            item_id=item.item_id,
            status=status,
            resolution=(ResolutionModel.from_resolution(item.resolution)
                        if item.resolution else None),
        )

    @app.post("/items/{item_id}/resolution", response_model=ResolutionModel)
    def resolve_item(item_id: str, request: ResolutionRequest) -> ResolutionModel:
        get_item(item_id)
        try:
            resolution = triage.resolve(
                item_id,
                consensus=request.consensus,
                decision=request.decision,
                types=set(request.types) if request.types is not None else None,
            )
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except TriageError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return ResolutionModel.from_resolution(resolution)

    @app.get("/export/validated", response_model=ExportResponse)
    def export(force: bool = Query(default=False)) -> ExportResponse:
        pending = [i.item_id for i in triage.items() if i.resolution is None]
        if pending and not force:
            raise HTTPException(
                status_code=409,
                detail="pending review items block export: " + ", ".join(sorted(pending)))
        rows = []
        for item in triage.items():
            if item.resolution is None or item.resolution.final_decision != "true_positive":
                continue
            bundle = bundles.get(item.bundle_id)
            if bundle is None:
                logger.warning("%s: bundle missing; skipping from export", item.bundle_id)
                continue
            rows.append(ValidatedRow(
                bundle_id=item.bundle_id,
                item_id=item.item_id,
                stage=item.stage,
                pii_types=sorted(item.resolution.final_types),
                domain=bundle.domain,
                final_url=bundle.final_url,
                url_id=bundle.url_id,
            ))
        rows.sort(key=lambda r: r.bundle_id)
        return ExportResponse(count=len(rows), validated=rows)

    return app
