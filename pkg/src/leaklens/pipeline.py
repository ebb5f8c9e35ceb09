"""Pipeline orchestration: ingest → bundles → extract → screen → analyze → report.

Each stage reads and writes well-known workspace files, records completion
in ``pipeline_state.json``, and can be re-run independently; a full run
skips stages already completed unless forced.  Every stage is
deterministic for a fixed input tree and config, so two runs produce
byte-identical outputs (timestamps excepted where explicitly noted).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .adapters import build_adapter, scan_value_examples
from .analysis import (
    AccessClassification,
    ExposureRecord,
    OverfetchFinding,
    UserProfile,
    build_profiles,
    classify_access,
    exposure_time,
    privileged_exposure,
    overfetch_diff,
    write_access_csv,
    write_exposure_csv,
    write_overfetch_csv,
    write_privilege_csv,
    write_profiles_csv,
    write_tokens_csv,
)
from .capture import ArtifactBundle, BundleStore
from .config import AuditConfig
from .corpus import CorpusStore, UrlRecord
from .detection import FuzzyConfig, PiiVerdict, screen_payload, write_audit
from .extraction import PayloadIndex, extract_for_bundle, resolve_ui_text, ExtractionStats
from .lexicon import Lexicon, load_lexicon
from .report import Report, ReportInputs, emit, summarize
from .tokens import (
    TokenAnalysis,
    TokenError,
    TokenSpace,
    exact_hit_probability,
    simulate_enumeration,
    token_entropy,
)
from .triage import (
    HierarchyResult,
    TriageStore,
    ValidatedRecord,
    apply_scripted_labels,
    export_validated,
    run_hierarchy,
)
from .util import atomic_write, format_timestamp, parse_timestamp, read_jsonl, utcnow
from .workspace import Workspace

logger = logging.getLogger(__name__)

STAGES = ("ingest", "bundles", "extract", "screen", "analyze", "report")

ENUMERATION_STRATEGIES = ("random_in_class", "numeric_increment", "last_char_cycle")


class PipelineError(RuntimeError):
    pass


@dataclass
class StageOutcome:
    stage: str
    skipped: bool
    summary: dict


class Pipeline:
    """Runs audit stages against one workspace."""

    def __init__(self, config: AuditConfig):
        self.config = config
        self.workspace = Workspace(config.workspace).ensure()
        self.lexicon: Lexicon = load_lexicon()

    # ------------------------------------------------------------
    # Stage driver
    # ------------------------------------------------------------

    def run(self, stages: tuple[str, ...] | None = None,
            force: bool = False) -> list[StageOutcome]:
        requested = stages or STAGES
        unknown = set(requested) - set(STAGES)
        if unknown:
            raise PipelineError(f"unknown stages: {', '.join(sorted(unknown))}")
        outcomes = []
        for stage in STAGES:
            if stage not in requested:
                continue
            outcomes.append(self.run_stage(stage, force=force or stages is not None))
        return outcomes

    def run_stage(self, stage: str, force: bool = False) -> StageOutcome:
        state = self.workspace.read_state()
        done = state.get("stages", {})
        if stage in done and not force:
            logger.info("stage %s already complete; skipping", stage)
            return StageOutcome(stage, skipped=True, summary=done[stage].get("summary", {}))
        runner = getattr(self, f"stage_{stage}")
        logger.info("running stage %s", stage)
        summary = runner()
        state.setdefault("stages", {})[stage] = {
            "completed_at": format_timestamp(utcnow()),
            "summary": summary,
        }
        self.workspace.write_state(state)
        return StageOutcome(stage, skipped=False, summary=summary)

    # ------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------

    def stage_ingest(self) -> dict:
        if self.config.corpus_path is None:
            raise PipelineError("config has no corpus path; nothing to ingest")
        # The message store is derived state: rebuild it from the corpus
        # file so re-running the stage cannot double-ingest.
        self.workspace.messages_path.unlink(missing_ok=True)
        corpus = CorpusStore(self.workspace.root)
        result = corpus.ingest(self.config.corpus_path)
        url_count = corpus.write_urls_csv(self.workspace.urls_csv)
        return {
            "messages": result.stored,
            "malformed": result.malformed,
            "unique_urls": url_count,
        }

    def stage_bundles(self) -> dict:
        corpus = CorpusStore(self.workspace.root)
        first_seen = {u.url_id: u.first_seen_at for u in corpus.unique_urls()}
        store = BundleStore(self.workspace.root)
        ingested = duplicates = 0
        errors: list[str] = []
        for directory in self.config.bundle_dirs:
            outcomes, dir_errors = store.ingest_dir(directory, first_seen)
            errors.extend(dir_errors)
            for outcome in outcomes:
                if outcome.duplicate:
                    duplicates += 1
                else:
                    ingested += 1
        dedup = store.dedup_ui()
        return {
            "ingested": ingested,
            "duplicate_final_urls": duplicates,
            "ui_duplicates": len(dedup.duplicates),
            "retained": len(dedup.retained),
            "errors": errors,
        }

    def stage_extract(self) -> dict:
        store = BundleStore(self.workspace.root)
        index = PayloadIndex(self.workspace.payloads_path)
        stats = ExtractionStats()
        added = linked = 0
        for bundle in store.retained():
            for payload in extract_for_bundle(bundle, stats):
                if index.add(payload):
                    added += 1
                else:
                    linked += 1
        index.save()
        return {
            "bodies_seen": stats.bodies_seen,
            "bodies_skipped": stats.bodies_skipped,
            "unique_payloads": added,
            "deduplicated": linked,
            "total_stored": len(index),
        }

    def stage_screen(self) -> dict:
        store = BundleStore(self.workspace.root)
        index = PayloadIndex(self.workspace.payloads_path)
        adapter = build_adapter(self.config.adapter)
        fuzzy = FuzzyConfig(accept=self.config.fuzzy_accept, margin=self.config.fuzzy_margin)
        triage = TriageStore(self.workspace.triage_path, self.lexicon)

        script = None
        if self.config.scripted_labels is not None:
            script = json.loads(Path(self.config.scripted_labels).read_text("utf-8"))

        result = run_hierarchy(store, index, self.lexicon, adapter, triage,
                               fuzzy=fuzzy, chunk_size=self.config.chunk_size)
        if script:
            # Review items surface progressively: resolving a Stage-1 item
            # can route its bundle into Stage 2, creating a new item.
            # Re-apply and re-run until the script makes no more progress.
            for _ in range(8):
                applied = apply_scripted_labels(triage, script)
                if applied["labels"] + applied["resolutions"] == 0:
                    break
                result = run_hierarchy(store, index, self.lexicon, adapter, triage,
                                       fuzzy=fuzzy, chunk_size=self.config.chunk_size)
                if not result.pending:
                    break

        ui_verdicts = [result.ui_verdicts[k] for k in sorted(result.ui_verdicts)]
        payload_verdicts = [result.payload_verdicts[k] for k in sorted(result.payload_verdicts)]
        write_audit(ui_verdicts, self.workspace.audit_ui_csv, self.workspace.audit_ui_jsonl)
        write_audit(payload_verdicts, self.workspace.audit_json_csv,
                    self.workspace.audit_json_jsonl)

        summary = {
            "ui_screened": len(ui_verdicts),
            "ui_flagged": sum(1 for v in ui_verdicts if v.flagged),
            "payloads_screened": len(payload_verdicts),
            "payloads_flagged": sum(1 for v in payload_verdicts if v.flagged),
            "validated": len(result.validated),
            "pending": sorted(result.pending),
            "no_artifact_bundles": sorted(result.no_artifact_bundles),
        }
        if result.pending:
            logger.warning("%d review items pending; validated export deferred",
                           len(result.pending))
        else:
            export_validated(result, self.workspace.validated_path)
            summary["exported"] = len(result.validated)
        return summary

    # ------------------------------------------------------------
    # Analysis
    # ------------------------------------------------------------

    def _load_validated(self) -> list[ValidatedRecord]:
        if not self.workspace.validated_path.is_file():
            raise PipelineError(
                "no validated set: run the screen stage (and resolve pending reviews) first")
        return [
            ValidatedRecord(
                bundle_id=row["bundle_id"],
                item_id=row["item_id"],
                stage=row["stage"],
                pii_types=set(row["pii_types"]),
                domain=row["domain"],
                final_url=row["final_url"],
                url_id=row["url_id"],
            )
            for row in read_jsonl(self.workspace.validated_path)
        ]

    def _pii_values_for(self, bundle: ArtifactBundle,
                        payload_verdicts: dict[str, PiiVerdict],
                        index: PayloadIndex) -> tuple[list[str], str]:
        """Concrete PII values seen for a bundle, plus its UI text.

        Values come from payload verdict examples and a value scan of the
        UI text; they feed the access/privilege searches transiently.
        """
        values: list[str] = []
        for payload in index.payloads_for(bundle.bundle_id):
            verdict = payload_verdicts.get("p" + payload.content_hash[:12])
            if verdict and verdict.examples_by_type:
                values.extend(verdict.examples_by_type.values())
        ui_text = ""
        resolution = resolve_ui_text(bundle)
        if resolution.status == "ok":
            ui_text = resolution.ui_text.text
            values.extend(scan_value_examples(ui_text).values())
        seen: set[str] = set()
        unique = [v for v in values if v and not (v in seen or seen.add(v))]
        return unique, ui_text

    def stage_analyze(self) -> dict:
        validated = self._load_validated()
        store = BundleStore(self.workspace.root)
        bundles = {b.bundle_id: b for b in store.bundles()}
        corpus = CorpusStore(self.workspace.root)
        urls: dict[str, UrlRecord] = {u.url_id: u for u in corpus.unique_urls()}
        index = PayloadIndex(self.workspace.payloads_path)
        adapter = build_adapter(self.config.adapter)
        fuzzy = FuzzyConfig(accept=self.config.fuzzy_accept, margin=self.config.fuzzy_margin)
        warnings: list[str] = []

        from .detection import read_audit_jsonl

        ui_verdicts = {v.item_id: v for v in read_audit_jsonl(self.workspace.audit_ui_jsonl)}
        payload_verdicts = {v.item_id: v
                            for v in read_audit_jsonl(self.workspace.audit_json_jsonl)}

        def payload_verdict(payload) -> PiiVerdict:
            """Audit verdict if the hierarchy screened this payload; screen
            on demand otherwise (payloads of UI-validated bundles are never
            screened by the hierarchy)."""
            pid = "p" + payload.content_hash[:12]
            verdict = payload_verdicts.get(pid)
            if verdict is None:
                verdict = screen_payload(payload, self.lexicon, adapter, item_id=pid,
                                         fuzzy=fuzzy, chunk_size=self.config.chunk_size)
                payload_verdicts[pid] = verdict
            return verdict

        # ---- exposure ----
        exposure_records, histogram, exposure_warnings = exposure_time(
            validated, bundles, urls)
        warnings.extend(exposure_warnings)
        write_exposure_csv(exposure_records, self.workspace.exposure_csv)

        # ---- profiles ----
        profiles = build_profiles(validated, self.lexicon.contact_labels())
        write_profiles_csv(profiles, self.workspace.profiles_csv)

        # ---- access / privilege / overfetch per validated bundle ----
        access_rows: list[tuple[str, AccessClassification]] = []
        privilege_rows: list[tuple[str, str, str]] = []
        overfetch_rows: list[tuple[str, OverfetchFinding]] = []
        for record in sorted(validated, key=lambda r: r.bundle_id):
            bundle = bundles.get(record.bundle_id)
            if bundle is None:
                warnings.append(f"{record.bundle_id}: validated bundle missing from store")
                continue
            values, ui_text = self._pii_values_for(bundle, payload_verdicts, index)

            classification = classify_access(bundle, values, record.url_id)
            if classification is None:
                warnings.append(f"{record.bundle_id}: initial access unclassified")
            else:
                access_rows.append((record.bundle_id, classification))

            privilege_rows.append((record.bundle_id, record.url_id,
                                   privileged_exposure(bundle, values, ui_text)))

            payloads = index.payloads_for(bundle.bundle_id)
            if payloads:
                payload_types: set[str] = set()
                for payload in payloads:
                    payload_types |= payload_verdict(payload).pii_types
                if record.stage == "ui":
                    ui_types = set(record.pii_types)
                else:
                    ui_verdict = ui_verdicts.get(f"{bundle.bundle_id}:ui")
                    ui_types = set(ui_verdict.pii_types) if ui_verdict else set()
                overfetch_rows.append(
                    (record.bundle_id,
                     overfetch_diff(ui_types, payload_types, record.url_id)))

        write_access_csv(access_rows, self.workspace.access_csv)
        write_privilege_csv(privilege_rows, self.workspace.privilege_csv)
        write_overfetch_csv(overfetch_rows, self.workspace.overfetch_csv)

        # ---- tokens: one representative URL per validated domain ----
        token_rows: list[tuple[str, TokenAnalysis]] = []
        by_domain: dict[str, ValidatedRecord] = {}
        for record in sorted(validated, key=lambda r: r.bundle_id):
            by_domain.setdefault(record.domain, record)
        for domain in sorted(by_domain):
            record = by_domain[domain]
            try:
                token_rows.append(
                    (domain, token_entropy(record.final_url, url_id=record.url_id)))
            except TokenError as exc:
                warnings.append(f"{domain}: no token to analyze ({exc})")
        write_tokens_csv(token_rows, self.workspace.tokens_csv)

        # ---- enumeration simulation against the mock space ----
        enumeration = None
        if self.config.mock.get("space_size"):
            space = TokenSpace.from_config(self.config.mock)
            estimates = []
            for strategy in ENUMERATION_STRATEGIES:
                estimate = simulate_enumeration(
                    space, strategy,
                    tries=self.config.enumeration_tries,
                    trials=self.config.enumeration_trials,
                    seed=self.config.enumeration_seed)
                estimates.append({
                    "strategy": estimate.strategy,
                    "tries": estimate.tries,
                    "trials": estimate.trials,
                    "hits": estimate.hits,
                    "hit_rate": estimate.hit_rate,
                    "seed": estimate.seed,
                    "replacement": estimate.replacement,
                })
            enumeration = {
                "space_size": space.space_size,
                "occupied": len(space.occupied),
                "estimates": estimates,
                "exact_distinct_draw_probability": float(
                    exact_hit_probability(space, self.config.enumeration_tries)),
            }

        document = {
            "access": [
                {"bundle_id": b, "url_id": c.url_id, "class": c.cls,
                 "evidence": c.evidence_locator}
                for b, c in access_rows
            ],
            "privilege": [
                {"bundle_id": b, "url_id": u, "class": cls}
                for b, u, cls in privilege_rows
            ],
            "overfetch": [
                {"bundle_id": b, "url_id": f.url_id,
                 "ui_pii": sorted(f.ui_pii), "payload_pii": sorted(f.payload_pii),
                 "overfetched": sorted(f.overfetched)}
                for b, f in overfetch_rows
            ],
            "tokens": [
                {"domain": d, "url_id": t.url_id, "token": t.token, "length": t.L,
                 "alphabet_class": t.alphabet_class, "alphabet_size": t.A,
                 "entropy_bits": t.H, "flagged_low_entropy": t.flagged_low_entropy,
                 "has_separators": t.has_separators}
                for d, t in token_rows
            ],
            "exposure": [
                {"url_id": r.url_id, "bundle_id": r.bundle_id,
                 "delivery_at": format_timestamp(r.delivery_at),
                 "crawled_at": format_timestamp(r.crawled_at),
                 "exposure_days": r.exposure_days, "bucket": r.bucket}
                for r in exposure_records
            ],
            "exposure_histogram": dict(sorted(histogram.items())),
            "profiles": [
                {"profile_key": p.profile_key, "url_id": p.url_id,
                 "pii_types": list(p.pii_type_set)}
                for p in sorted(profiles, key=lambda p: p.profile_key)
            ],
            "enumeration": enumeration,
            "warnings": warnings,
        }
        atomic_write(self.workspace.analysis_json,
                     json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n")

        return {
            "validated": len(validated),
            "exposure_records": len(exposure_records),
            "profiles": len(profiles),
            "access_classified": len(access_rows),
            "overfetch_findings": sum(1 for _, f in overfetch_rows if f.overfetched),
            "tokens_analyzed": len(token_rows),
            "warnings": warnings,
        }

    def stage_report(self) -> dict:
        validated = self._load_validated()
        if not self.workspace.analysis_json.is_file():
            raise PipelineError("no analysis outputs: run the analyze stage first")
        analysis = json.loads(self.workspace.analysis_json.read_text("utf-8"))

        inputs = ReportInputs(
            validated=validated,
            access=[
                (row["bundle_id"],
                 AccessClassification(row["url_id"], row["class"], row["evidence"]))
                for row in analysis.get("access", [])
            ],
            privilege=[
                (row["bundle_id"], row["url_id"], row["class"])
                for row in analysis.get("privilege", [])
            ],
            overfetch=[
                (row["bundle_id"],
                 OverfetchFinding(row["url_id"], set(row["ui_pii"]),
                                  set(row["payload_pii"])))
                for row in analysis.get("overfetch", [])
            ],
            tokens=[
                (row["domain"],
                 TokenAnalysis(row["url_id"], row["token"], row["length"],
                               row["alphabet_class"], row["alphabet_size"],
                               row["entropy_bits"], row["flagged_low_entropy"],
                               row["has_separators"]))
                for row in analysis.get("tokens", [])
            ],
            exposure=[
                ExposureRecord(row["url_id"], row["bundle_id"],
                               parse_timestamp(row["delivery_at"]),
                               parse_timestamp(row["crawled_at"]),
                               row["exposure_days"], row["bucket"])
                for row in analysis.get("exposure", [])
            ],
            exposure_histogram=analysis.get("exposure_histogram", {}),
            profiles=[
                UserProfile(row["url_id"], tuple(row["pii_types"]), row["profile_key"])
                for row in analysis.get("profiles", [])
            ],
            manual_findings=self.config.manual_findings,
        )
        report = summarize(inputs)
        written = emit(report, self.workspace.report_dir)
        return {
            "services": report.totals["services"],
            "validated_urls": report.totals["validated_urls"],
            "files": [str(p) for p in written],
        }


def build_report(config: AuditConfig) -> Report:
    """Summarize an already-analyzed workspace without re-emitting files."""
    pipeline = Pipeline(config)
    validated = pipeline._load_validated()
    analysis = json.loads(pipeline.workspace.analysis_json.read_text("utf-8"))
    inputs = ReportInputs(
        validated=validated,
        access=[(r["bundle_id"], AccessClassification(r["url_id"], r["class"], r["evidence"]))
                for r in analysis.get("access", [])],
        privilege=[(r["bundle_id"], r["url_id"], r["class"])
                   for r in analysis.get("privilege", [])],
        overfetch=[(r["bundle_id"],
                    OverfetchFinding(r["url_id"], set(r["ui_pii"]), set(r["payload_pii"])))
                   for r in analysis.get("overfetch", [])],
        tokens=[(r["domain"],
                 TokenAnalysis(r["url_id"], r["token"], r["length"], r["alphabet_class"],
                               r["alphabet_size"], r["entropy_bits"],
                               r["flagged_low_entropy"], r["has_separators"]))
                for r in analysis.get("tokens", [])],
        exposure_histogram=analysis.get("exposure_histogram", {}),
        profiles=[UserProfile(r["url_id"], tuple(r["pii_types"]), r["profile_key"])
                  for r in analysis.get("profiles", [])],
        manual_findings=config.manual_findings,
    )
    return summarize(inputs)
