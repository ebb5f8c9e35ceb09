"""Two-reviewer triage store and the two-stage screening hierarchy."""

from __future__ import annotations

import json

import pytest

from leaklens.adapters import RuleBasedAdapter
from leaklens.capture import BundleStore
from leaklens.detection import PiiVerdict
from leaklens.extraction import JsonPayload, PayloadIndex, canonicalize
from leaklens.triage import (
    ConflictError,
    NotFoundError,
    ReviewItem,
    ReviewLabel,
    TriageError,
    TriageStore,
    apply_scripted_labels,
    export_validated,
    json_item_id,
    merge_payload_verdicts,
    run_hierarchy,
    ui_item_id,
)


def _verdict(item_id, stage="ui", types=("first name",), flagged=True):
    return PiiVerdict(item_id, stage, flagged, set(types),
                      "Y,{" + ",".join(types) + "}" if flagged else "N,{}",
                      "exact", None, "h", "rule-based-v1")


def _item(store, item_id="b1:ui", types=("first name",)):
    return store.ensure_item(
        ReviewItem(item_id, "ui", item_id.split(":")[0], _verdict(item_id, types=types)))


def _label(item_id, reviewer, decision="true_positive", **kw):
    return ReviewLabel(item_id=item_id, reviewer_id=reviewer, decision=decision, **kw)


@pytest.fixture
def store(tmp_path, lexicon):
    return TriageStore(tmp_path / "triage.json", lexicon)


# ------------------------------------------------------------
# Labeling and resolution
# ------------------------------------------------------------


def test_agreement_auto_resolves_with_verdict_types(store):
    _item(store)
    assert store.submit_label(_label("b1:ui", "alice")) == "pending"
    assert store.submit_label(_label("b1:ui", "bob")) == "resolved"
    resolution = store.get("b1:ui").resolution
    assert resolution.final_decision == "true_positive"
    assert resolution.final_types == {"first name"}     # defaulted from the verdict
    assert resolution.method == "agreement"


def test_agreement_with_corrected_types(store):
    _item(store, types=("first name", "gender"))
    corrected = {"first name"}
    store.submit_label(_label("b1:ui", "alice", corrected_types=set(corrected)))
    store.submit_label(_label("b1:ui", "bob", corrected_types=set(corrected)))
    assert store.get("b1:ui").resolution.final_types == corrected


def test_false_positive_agreement(store):
    _item(store)
    store.submit_label(_label("b1:ui", "alice", "false_positive",
                              fp_reason="sample_demo_content"))
    store.submit_label(_label("b1:ui", "bob", "false_positive",
                              fp_reason="keyword_match"))
    resolution = store.get("b1:ui").resolution
    assert resolution.final_decision == "false_positive"
    assert resolution.final_types == set()


def test_decision_disagreement_waits_for_discussion(store):
    _item(store)
    store.submit_label(_label("b1:ui", "alice"))
    status = store.submit_label(_label("b1:ui", "bob", "false_positive",
                                       fp_reason="misclassification"))
    assert status == "labeled"
    assert store.get("b1:ui").resolution is None
    with pytest.raises(ConflictError, match="two labels"):
        store.submit_label(_label("b1:ui", "carol"))


def test_corrected_type_disagreement_is_a_conflict(store):
    _item(store, types=("first name", "gender"))
    store.submit_label(_label("b1:ui", "alice", corrected_types={"first name"}))
    status = store.submit_label(_label("b1:ui", "bob", corrected_types={"gender"}))
    assert status == "labeled"


def test_discussion_consensus_true_positive(store):
    _item(store, types=("first name", "gender"))
    store.submit_label(_label("b1:ui", "alice", corrected_types={"first name"}))
    store.submit_label(_label("b1:ui", "bob", "false_positive",
                              fp_reason="misclassification"))
    resolution = store.resolve("b1:ui", consensus=True, decision="true_positive")
    assert resolution.method == "discussion"
    assert resolution.final_types == {"first name"}     # union of TP labels


def test_no_consensus_defaults_to_false_positive(store):
    _item(store)
    store.submit_label(_label("b1:ui", "alice"))
    store.submit_label(_label("b1:ui", "bob", "false_positive",
                              fp_reason="misclassification"))
    resolution = store.resolve("b1:ui", consensus=False)
    assert resolution.final_decision == "false_positive"
    assert resolution.method == "default_false_positive"
    assert resolution.final_types == set()


def test_label_validation_rules(store, lexicon):
    _item(store)
    with pytest.raises(TriageError, match="fp_reason"):
        store.submit_label(_label("b1:ui", "alice", "false_positive"))
    with pytest.raises(TriageError, match="fp_reason"):
        store.submit_label(_label("b1:ui", "alice", "false_positive",
                                  fp_reason="not-a-reason"))
    with pytest.raises(TriageError, match="corrected_types"):
        store.submit_label(_label("b1:ui", "alice", "false_positive",
                                  fp_reason="keyword_match",
                                  corrected_types={"first name"}))
    with pytest.raises(TriageError, match="fp_reason"):
        store.submit_label(_label("b1:ui", "alice", fp_reason="keyword_match"))
    with pytest.raises(TriageError, match="lexicon"):
        store.submit_label(_label("b1:ui", "alice", corrected_types={"not a label"}))
    with pytest.raises(TriageError, match="decision"):
        store.submit_label(_label("b1:ui", "alice", "maybe"))


def test_conflict_guards(store):
    _item(store)
    store.submit_label(_label("b1:ui", "alice"))
    with pytest.raises(ConflictError, match="already labeled"):
        store.submit_label(_label("b1:ui", "alice"))
    with pytest.raises(ConflictError, match="no label conflict"):
        store.resolve("b1:ui", consensus=False)         # not in labeled state
    store.submit_label(_label("b1:ui", "bob"))          # agreement resolves
    with pytest.raises(ConflictError, match="already resolved"):
        store.submit_label(_label("b1:ui", "carol"))
    with pytest.raises(ConflictError, match="already resolved"):
        store.resolve("b1:ui", consensus=False)
    with pytest.raises(NotFoundError):
        store.get("nope:ui")


def test_unflagged_verdict_never_becomes_item(store):
    with pytest.raises(TriageError, match="flagged"):
        store.ensure_item(ReviewItem("b9:ui", "ui", "b9",
                                     _verdict("b9:ui", flagged=False)))


def test_store_persistence_round_trip(tmp_path, lexicon):
    path = tmp_path / "triage.json"
    store = TriageStore(path, lexicon)
    _item(store, types=("first name", "gender"))
    store.submit_label(_label("b1:ui", "alice"))
    store.submit_label(_label("b1:ui", "bob", "false_positive",
                              fp_reason="keyword_match"))
    store.save()
    reloaded = TriageStore(path, lexicon)
    item = reloaded.get("b1:ui")
    assert item.status == "labeled"
    assert {l.reviewer_id for l in item.labels} == {"alice", "bob"}
    assert item.verdict.pii_types == {"first name", "gender"}
    reloaded.resolve("b1:ui", consensus=False)
    assert TriageStore(path, lexicon).get("b1:ui").resolution.method == \
        "default_false_positive"


def test_items_filtering(store):
    _item(store, "b1:ui")
    _item(store, "b2:ui")
    store.ensure_item(ReviewItem("b3:json", "json", "b3",
                                 _verdict("b3:json", stage="json")))
    store.submit_label(_label("b1:ui", "alice"))
    store.submit_label(_label("b1:ui", "bob"))
    assert [i.item_id for i in store.items(stage="json")] == ["b3:json"]
    assert [i.item_id for i in store.items(status="resolved")] == ["b1:ui"]
    assert len(store.items()) == 3


# ------------------------------------------------------------
# merge of per-payload verdicts
# ------------------------------------------------------------


def test_merge_payload_verdicts_union():
    v1 = PiiVerdict("pa", "json", True, {"diagnosis"}, "Y,{diagnosis (flu)}",
                    "exact", {"diagnosis": "flu"})
    v2 = PiiVerdict("pb", "json", False, set(), "N,{}", "variant_accepted", None)
    v3 = PiiVerdict("pc", "json", True, {"first name"}, "Y,{first name}",
                    "fuzzy_mapped", None)
    merged = merge_payload_verdicts("b1:json", [v1, v2, v3])
    assert merged.flagged
    assert merged.pii_types == {"diagnosis", "first name"}
    assert merged.parse_status == "fuzzy_mapped"        # deepest technique wins
    assert merged.examples_by_type == {"diagnosis": "flu"}
    assert merged.stage == "json"


# ------------------------------------------------------------
# Hierarchy routing
# ------------------------------------------------------------


class CountingAdapter:
    """Rule-based behavior plus an invocation counter."""

    def __init__(self):
        self._inner = RuleBasedAdapter()
        self.name = self._inner.name
        self.calls = 0

    def invoke(self, system_prompt, user_prompt):
        self.calls += 1
        return self._inner.invoke(system_prompt, user_prompt)


def _manifest(directory, slug, *, url, ui_text=None, html=None):
    d = directory / slug
    d.mkdir(parents=True)
    manifest = {"url": url, "final_url": url, "crawled_at": "2026-04-01T12:00:00Z"}
    if ui_text is not None:
        (d / "ui.txt").write_text(ui_text)
        (d / "ui.png").write_bytes(slug.encode())
        manifest["ui_text"] = "ui.txt"
        manifest["ui_image"] = "ui.png"
    if html is not None:
        (d / "page.html").write_text(html)
        manifest["html"] = "page.html"
    path = d / f"{slug}.manifest.json"
    path.write_text(json.dumps(manifest))
    return path


@pytest.fixture
def hierarchy_env(tmp_path, lexicon):
    """Five bundles covering every routing path."""
    bundles = BundleStore(tmp_path / "ws")
    ids = {}
    specs = {
        # UI PII + payload: validated in Stage 1, payload must never be screened
        "ui-valid": dict(url="https://a.test/ui-valid", ui_text="Customer: Riley Fox",
                         html="<p>page</p>"),
        # UI false flag, PII payload: rejected in Stage 1 review, caught in Stage 2
        "ui-reject": dict(url="https://a.test/ui-reject", ui_text="Agent: Casey Brooks",
                          html="<p>page</p>"),
        # clean UI, clean payload
        "clean": dict(url="https://a.test/clean", ui_text="Your quote is ready",
                      html="<p>page</p>"),
        # no UI text at all, PII payload: straight to Stage 2
        "json-only": dict(url="https://a.test/json-only", html="<p>page</p>"),
    }
    for slug, spec in specs.items():
        outcome = bundles.ingest_bundle(_manifest(tmp_path, slug, **spec))
        ids[slug] = outcome.bundle_id
    # a manifest with no artifacts at all
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "empty.manifest.json").write_text(json.dumps(
        {"url": "https://a.test/empty", "final_url": "https://a.test/empty",
         "crawled_at": "2026-04-01T12:00:00Z"}))
    ids["empty"] = bundles.ingest_bundle(empty / "empty.manifest.json").bundle_id

    index = PayloadIndex(tmp_path / "payloads.jsonl")

    def add_payload(slug, text):
        canonical, digest = canonicalize(text)
        index.add(JsonPayload(ids[slug], "har_response", canonical, digest, "o"))

    add_payload("ui-valid", '{"ssn": "078-05-1120"}')
    add_payload("ui-reject", '{"patient": {"diagnosis": "asthma"}}')
    add_payload("clean", '{"status": "ok"}')
    add_payload("json-only", '{"email": "dana@x.test"}')

    triage = TriageStore(tmp_path / "triage.json", lexicon)
    adapter = CountingAdapter()
    return tmp_path, bundles, index, triage, adapter, ids


def test_hierarchy_first_pass_routing(hierarchy_env, lexicon):
    _, bundles, index, triage, adapter, ids = hierarchy_env
    result = run_hierarchy(bundles, index, lexicon, adapter, triage)

    assert result.validated == []
    assert set(result.pending) == {
        ui_item_id(ids["ui-valid"]), ui_item_id(ids["ui-reject"]),
        json_item_id(ids["json-only"]),
    }
    assert result.no_artifact_bundles == [ids["empty"]]
    assert result.traces[ids["clean"]].final == "rejected"
    assert result.traces[ids["clean"]].json_screened
    assert result.traces[ids["ui-valid"]].final == "pending_ui"
    assert result.traces[ids["json-only"]].final == "pending_json"
    # Pending Stage-1 bundles are not JSON-screened yet.
    assert "p" + canonicalize('{"ssn": "078-05-1120"}')[1][:12] not in result.payload_verdicts
    assert "p" + canonicalize('{"patient": {"diagnosis": "asthma"}}')[1][:12] not in result.payload_verdicts


def test_hierarchy_full_resolution_flow(hierarchy_env, lexicon):
    tmp_path, bundles, index, triage, adapter, ids = hierarchy_env
    run_hierarchy(bundles, index, lexicon, adapter, triage)

    # Reviews: ui-valid is a TP; ui-reject is sample content (FP); the
    # json-only payload item is a TP.
    for reviewer in ("alice", "bob"):
        triage.submit_label(_label(ui_item_id(ids["ui-valid"]), reviewer))
        triage.submit_label(_label(ui_item_id(ids["ui-reject"]), reviewer,
                                   "false_positive", fp_reason="sample_demo_content"))
        triage.submit_label(_label(json_item_id(ids["json-only"]), reviewer))

    second = run_hierarchy(bundles, index, lexicon, adapter, triage)
    # ui-reject fell through to Stage 2 and produced a fresh pending item.
    assert second.pending == [json_item_id(ids["ui-reject"])]
    assert {r.bundle_id for r in second.validated} == {ids["ui-valid"], ids["json-only"]}

    for reviewer in ("alice", "bob"):
        triage.submit_label(_label(json_item_id(ids["ui-reject"]), reviewer,
                                   corrected_types={"diagnosis"}))
    final = run_hierarchy(bundles, index, lexicon, adapter, triage)
    assert final.pending == []
    by_bundle = {r.bundle_id: r for r in final.validated}
    assert by_bundle[ids["ui-valid"]].stage == "ui"
    assert by_bundle[ids["ui-valid"]].pii_types == {"first name", "last name"}
    assert by_bundle[ids["ui-reject"]].stage == "json"
    assert by_bundle[ids["ui-reject"]].pii_types == {"diagnosis"}
    assert by_bundle[ids["json-only"]].stage == "json"

    # Mutual exclusion: the Stage-1-validated bundle's payload was never screened.
    ssn_pid = "p" + canonicalize('{"ssn": "078-05-1120"}')[1][:12]
    assert ssn_pid not in final.payload_verdicts
    assert final.traces[ids["ui-valid"]].json_screened is False
    # The Stage-1-rejected bundle WAS JSON-screened.
    assert final.traces[ids["ui-reject"]].json_screened is True


def test_hierarchy_rerun_is_idempotent_and_cached(hierarchy_env, lexicon):
    _, bundles, index, triage, adapter, ids = hierarchy_env
    run_hierarchy(bundles, index, lexicon, adapter, triage)
    first_calls = adapter.calls
    result = run_hierarchy(bundles, index, lexicon, adapter, triage)
    # Same pending set, and a re-run re-screens (fresh caches per run) but
    # never grows the item list.
    assert set(result.pending) == {
        ui_item_id(ids["ui-valid"]), ui_item_id(ids["ui-reject"]),
        json_item_id(ids["json-only"]),
    }
    assert len(triage.items()) == 3
    assert adapter.calls == 2 * first_calls


def test_export_blocks_on_pending(hierarchy_env, lexicon, tmp_path):
    _, bundles, index, triage, adapter, ids = hierarchy_env
    result = run_hierarchy(bundles, index, lexicon, adapter, triage)
    out = tmp_path / "validated.jsonl"
    with pytest.raises(TriageError, match="pending"):
        export_validated(result, out)
    rows = export_validated(result, out, force=True)
    assert rows == []
    assert out.read_text() == ""


def test_export_rows_sorted_by_bundle(hierarchy_env, lexicon, tmp_path):
    _, bundles, index, triage, adapter, ids = hierarchy_env
    run_hierarchy(bundles, index, lexicon, adapter, triage)
    for reviewer in ("alice", "bob"):
        triage.submit_label(_label(ui_item_id(ids["ui-valid"]), reviewer))
        triage.submit_label(_label(ui_item_id(ids["ui-reject"]), reviewer,
                                   "false_positive", fp_reason="sample_demo_content"))
        triage.submit_label(_label(json_item_id(ids["json-only"]), reviewer))
    result = run_hierarchy(bundles, index, lexicon, adapter, triage)
    rows = export_validated(result, tmp_path / "v.jsonl", force=True)
    assert [r["bundle_id"] for r in rows] == sorted(r["bundle_id"] for r in rows)
    for row in rows:
        assert set(row) == {"bundle_id", "item_id", "stage", "pii_types",
                            "domain", "final_url", "url_id"}
        assert row["domain"] == "a.test"


def test_apply_scripted_labels_counts(store):
    _item(store, "b1:ui")
    script = {
        "labels": [
            {"item_id": "b1:ui", "reviewer_id": "alice", "decision": "true_positive"},
            {"item_id": "b1:ui", "reviewer_id": "bob", "decision": "true_positive"},
            {"item_id": "missing:ui", "reviewer_id": "alice",
             "decision": "true_positive"},
        ],
        "resolutions": [
            {"item_id": "b1:ui", "consensus": False},   # already auto-resolved
        ],
    }
    applied = apply_scripted_labels(store, script)
    assert applied == {"labels": 2, "resolutions": 0, "skipped": 2}
    # Re-applying the same script is safely idempotent.
    again = apply_scripted_labels(store, script)
    assert again == {"labels": 0, "resolutions": 0, "skipped": 4}
