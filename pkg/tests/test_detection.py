"""Verdict parsing, chunked screening, prompts, and the audit trail."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaklens.detection import (
    CHUNK_OVERLAP,
    CHUNK_SIZE,
    FuzzyConfig,
    ParsedVerdict,
    PiiVerdict,
    build_json_prompts,
    build_ui_prompts,
    chunk_text,
    fuzzy_score,
    merge_chunk_verdicts,
    parse_verdict,
    parse_verdict_full,
    read_audit_jsonl,
    screen_payload,
    screen_ui,
    write_audit,
)
from leaklens.extraction import JsonPayload, canonicalize
from leaklens.lexicon import Lexicon, PiiType, load_lexicon

# One row per observed output shape: (raw, flagged, types, parse_status).
# Covers all four post-processing techniques: canonical mapping (exact and
# simplified), tolerated format variants, the conservative fuzzy fallback,
# and the flagged-but-empty safe fallback, plus outright unparseable text.
GOLDEN_VERDICT_CASES = [
    # canonical: schema-conformant
    ("Y,{first name,last name}", True, {"first name", "last name"}, "exact"),
    ("N,{}", False, set(), "exact"),
    ("Y,{email address}", True, {"email address"}, "exact"),
    ("Y,{Email Address}", True, {"email address"}, "exact"),
    ("Y,{ email address , telephone number }", True,
     {"email address", "telephone number"}, "exact"),
    # canonical: simplified label (punctuation removed)
    ("Y,{e-mail address}", True, {"email address"}, "exact"),
    ("Y,{drivers' license number}", True, {"drivers license number"}, "exact"),
    # accepted format variants
    ("n,{}", False, set(), "variant_accepted"),
    ("y,{gender}", True, {"gender"}, "variant_accepted"),
    ("Y,{first name", True, {"first name"}, "variant_accepted"),
    ("Y,first name}", True, {"first name"}, "variant_accepted"),
    ("Y,first name", True, {"first name"}, "variant_accepted"),
    ("Y,{diagnosis}.", True, {"diagnosis"}, "variant_accepted"),
    ("  Y,{height}  ", True, {"height"}, "variant_accepted"),
    ("N,{}.", False, set(), "variant_accepted"),
    # conservative fuzzy mapping
    ("Y,{a email address}", True, {"email address"}, "fuzzy_mapped"),
    ("y,{a email address", True, {"email address"}, "fuzzy_mapped"),
    ("Y,{passport number,a email address}", True,
     {"passport number", "email address"}, "fuzzy_mapped"),
    # safe fallback: flagged with nothing mappable
    ("Y,{}", False, set(), "safe_fallback"),
    ("Y,{ssn}", False, set(), "safe_fallback"),
    ("Y,{quote id}", False, set(), "safe_fallback"),
    ("Y,{1. email address}", False, set(), "safe_fallback"),
    ("Y,{customer record,order number}", False, set(), "safe_fallback"),
    # unparseable
    ("Yes, the text contains first name", False, set(), "unparseable"),
    ("The text contains PII", False, set(), "unparseable"),
    ("", False, set(), "unparseable"),
    ("Y;{email address}", False, set(), "unparseable"),
    ("Maybe,{email address}", False, set(), "unparseable"),
    # mixed mappable/unmappable keeps what maps
    ("Y,{email address,ssn}", True, {"email address"}, "exact"),
    # N verdict ignores brace content
    ("N,{first name}", False, set(), "exact"),
]


@pytest.mark.parametrize("raw,flagged,types,status", GOLDEN_VERDICT_CASES,
                         ids=[repr(c[0]) for c in GOLDEN_VERDICT_CASES])
def test_parse_golden(lexicon, raw, flagged, types, status):
    got_flagged, got_types, got_status = parse_verdict(raw, lexicon)
    assert (got_flagged, got_types, got_status) == (flagged, types, status)


def test_golden_suite_size():
    assert len(GOLDEN_VERDICT_CASES) == 30


def test_parse_examples_by_type(lexicon):
    parsed = parse_verdict_full(
        "Y,{email address (user@x.test),diagnosis (flu),first name}", lexicon)
    assert parsed.flagged
    assert parsed.pii_types == {"email address", "diagnosis", "first name"}
    assert parsed.examples_by_type == {"email address": "user@x.test",
                                       "diagnosis": "flu"}


def test_parse_duplicate_label_keeps_first_example(lexicon):
    parsed = parse_verdict_full("Y,{first name (Riley),first name (Casey)}", lexicon)
    assert parsed.pii_types == {"first name"}
    assert parsed.examples_by_type == {"first name": "Riley"}


def test_parse_example_with_comma_inside_parens(lexicon):
    parsed = parse_verdict_full(
        "Y,{postal address (12 Oak St, Springfield),gender (female)}", lexicon)
    assert parsed.pii_types == {"postal address", "gender"}
    assert parsed.examples_by_type["postal address"] == "12 Oak St, Springfield"


def test_fuzzy_margin_rejects_ambiguous_candidates():
    lex = Lexicon(types=[
        PiiType("alpha beta x", "t", False),
        PiiType("alpha beta y", "t", False),
    ])
    # The candidate scores identically against both labels: margin rejects.
    flagged, types, status = parse_verdict("Y,{alpha beta}", lex)
    assert (flagged, types, status) == (False, set(), "safe_fallback")
    a = fuzzy_score("alpha beta", "alpha beta x")
    b = fuzzy_score("alpha beta", "alpha beta y")
    assert a == b >= FuzzyConfig().accept


def test_fuzzy_thresholds_are_configurable(lexicon):
    strict = FuzzyConfig(accept=0.99, margin=0.05)
    flagged, types, status = parse_verdict("Y,{a email address}", lexicon, strict)
    assert (flagged, status) == (False, "safe_fallback")


# ------------------------------------------------------------
# Parsing properties
# ------------------------------------------------------------


@settings(max_examples=300)
@given(st.text(max_size=120))
def test_parse_total_and_in_lexicon(raw):
    lexicon = load_lexicon()
    flagged, types, status = parse_verdict(raw, lexicon)
    assert types <= set(lexicon.labels)
    assert status in ("exact", "variant_accepted", "fuzzy_mapped",
                      "safe_fallback", "unparseable")
    if not types:
        assert not flagged          # never flagged without at least one type
    if flagged:
        assert types


@settings(max_examples=100)
@given(st.text(max_size=60))
def test_parse_flagged_empty_is_never_flagged(junk):
    lexicon = load_lexicon()
    flagged, types, status = parse_verdict("Y,{" + junk.replace("}", "") + "}", lexicon)
    if not types:
        assert not flagged
        assert status in ("safe_fallback", "unparseable")


@settings(max_examples=100)
@given(st.sets(st.sampled_from(load_lexicon().labels), min_size=1, max_size=6))
def test_parse_round_trips_exact_label_sets(labels):
    lexicon = load_lexicon()
    raw = "Y,{" + ",".join(sorted(labels)) + "}"
    flagged, types, status = parse_verdict(raw, lexicon)
    assert flagged and types == labels and status == "exact"


# ------------------------------------------------------------
# Chunking
# ------------------------------------------------------------


def test_chunk_text_single_when_fits():
    assert chunk_text("x" * CHUNK_SIZE) == ["x" * CHUNK_SIZE]


def test_chunk_text_covers_with_overlap():
    text = "".join(chr(0x30 + i % 60) for i in range(130_001))
    chunks = chunk_text(text)
    assert all(len(c) <= CHUNK_SIZE for c in chunks)
    stride = CHUNK_SIZE - CHUNK_OVERLAP
    rebuilt = chunks[0] + "".join(c[CHUNK_OVERLAP:] for c in chunks[1:])
    assert rebuilt == text
    for i in range(len(chunks) - 1):
        assert chunks[i][stride:] == chunks[i + 1][:len(chunks[i]) - stride]


def test_chunk_size_must_exceed_overlap():
    with pytest.raises(ValueError):
        chunk_text("abc", size=10, overlap=10)


@settings(max_examples=60)
@given(st.lists(
    st.tuples(st.booleans(),
              st.sets(st.sampled_from(["first name", "gender", "diagnosis"]), max_size=3),
              st.sampled_from(["exact", "variant_accepted", "fuzzy_mapped",
                               "safe_fallback", "unparseable"])),
    min_size=1, max_size=6),
    st.randoms(use_true_random=False))
def test_chunk_merge_order_independent(specs, rng):
    chunks = [(i, ParsedVerdict(flagged, types, status, {t: f"ex{i}" for t in types}),
               f"raw{i}")
              for i, (flagged, types, status) in enumerate(specs)]
    merged, raw = merge_chunk_verdicts(list(chunks))
    shuffled = list(chunks)
    rng.shuffle(shuffled)
    merged2, raw2 = merge_chunk_verdicts(shuffled)
    assert merged == merged2
    assert raw == raw2
    assert merged.flagged == any(f for f, _, _ in specs)
    assert merged.pii_types == set().union(*(t for _, t, _ in specs))
    for label, example in merged.examples_by_type.items():
        first_chunk = min(i for i, (_, types, _) in enumerate(specs) if label in types)
        assert example == f"ex{first_chunk}"


# ------------------------------------------------------------
# Screening through adapters
# ------------------------------------------------------------


class ScriptedAdapter:
    """Returns queued outputs, recording every prompt pair."""

    name = "scripted"

    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.calls = []

    def invoke(self, system_prompt, user_prompt):
        self.calls.append((system_prompt, user_prompt))
        return self.outputs.pop(0)


class ExplodingAdapter:
    name = "exploding"

    def invoke(self, system_prompt, user_prompt):
        raise RuntimeError("backend unavailable")


def test_screen_ui_builds_prompt_and_parses(lexicon):
    adapter = ScriptedAdapter(["Y,{first name}"])
    verdict = screen_ui("Riley Fox\nQuote ready", lexicon, adapter, item_id="i1")
    assert verdict.stage == "ui"
    assert verdict.flagged and verdict.pii_types == {"first name"}
    assert verdict.item_id == "i1"
    assert verdict.adapter == "scripted"
    system, user = adapter.calls[0]
    assert "Riley Fox" in user
    assert ",".join(lexicon.labels) in user
    assert "N,{}" in system


def test_screen_ui_adapter_failure_is_unparseable(lexicon):
    verdict = screen_ui("text", lexicon, ExplodingAdapter())
    assert not verdict.flagged
    assert verdict.parse_status == "unparseable"
    assert "backend unavailable" in verdict.raw_output


def _payload_of(text, bundle_id="b1"):
    canonical, digest = canonicalize(text)
    return JsonPayload(bundle_id, "har_response", canonical, digest, "o")


def test_screen_payload_single_chunk(lexicon):
    adapter = ScriptedAdapter(["Y,{diagnosis (flu)}"])
    verdict = screen_payload(_payload_of('{"diagnosis": "flu"}'), lexicon, adapter)
    assert verdict.stage == "json"
    assert verdict.pii_types == {"diagnosis"}
    assert verdict.examples_by_type == {"diagnosis": "flu"}
    assert verdict.item_id.startswith("p")
    assert len(adapter.calls) == 1
    assert "RESPONSES" in adapter.calls[0][1]


def test_screen_payload_chunks_oversized_and_merges(lexicon):
    big = json.dumps({"pad": "x" * 120_000, "phone": "+15550001111"})
    canonical, digest = canonicalize(big)
    payload = JsonPayload("b1", "har_response", canonical, digest, "o")
    expected_chunks = len(chunk_text(canonical))
    assert expected_chunks > 1
    outputs = ["N,{}"] * (expected_chunks - 1) + ["Y,{telephone number (+15550001111)}"]
    adapter = ScriptedAdapter(outputs)
    verdict = screen_payload(payload, lexicon, adapter)
    assert len(adapter.calls) == expected_chunks
    assert verdict.flagged
    assert verdict.pii_types == {"telephone number"}
    assert "[chunk 0]" in verdict.raw_output
    assert verdict.parse_status == "exact"


def test_screen_payload_custom_chunk_size(lexicon):
    payload = _payload_of('{"k": "' + "v" * 200 + '"}')
    adapter = ScriptedAdapter(["N,{}"] * 10)
    verdict = screen_payload(payload, lexicon, adapter, chunk_size=100, chunk_overlap=20)
    assert len(adapter.calls) > 1
    assert not verdict.flagged


# ------------------------------------------------------------
# Audit trail
# ------------------------------------------------------------


def test_audit_round_trip(tmp_path, lexicon):
    verdicts = [
        PiiVerdict("i1", "ui", True, {"first name", "gender"}, "Y,{first name,gender}",
                   "exact", None, "hash1", "rule-based-v1"),
        PiiVerdict("p1", "json", False, set(), "N,{}", "exact",
                   None, "hash2", "rule-based-v1"),
        PiiVerdict("p2", "json", True, {"diagnosis"}, "Y,{diagnosis (flu)}",
                   "variant_accepted", {"diagnosis": "flu"}, "hash3", "rule-based-v1"),
    ]
    csv_path = tmp_path / "audit.csv"
    jsonl_path = tmp_path / "audit.jsonl"
    assert write_audit(verdicts, csv_path, jsonl_path) == 3
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "item_id,stage,flagged,pii_types,parse_status"
    assert lines[1] == "i1,ui,true,first name;gender,exact"
    back = read_audit_jsonl(jsonl_path)
    assert back == verdicts


def test_audit_append_mode(tmp_path):
    v1 = PiiVerdict("i1", "ui", False, set(), "N,{}", "exact")
    v2 = PiiVerdict("i2", "ui", False, set(), "N,{}", "exact")
    csv_path, jsonl_path = tmp_path / "a.csv", tmp_path / "a.jsonl"
    write_audit([v1], csv_path, jsonl_path)
    write_audit([v2], csv_path, jsonl_path, append=True)
    assert len(read_audit_jsonl(jsonl_path)) == 2
    assert csv_path.read_text().count("item_id,") == 1


# ------------------------------------------------------------
# Prompts
# ------------------------------------------------------------


def test_prompts_embed_full_lexicon_and_schema(lexicon):
    system, user = build_ui_prompts("OCR BODY", lexicon)
    assert "Y,{" in system and "N,{}" in system
    assert user.count("first name") >= 1
    assert "OCR BODY" in user
    jsystem, juser = build_json_prompts('{"a":1}', lexicon)
    assert "example1" in jsystem
    assert '1. {"a":1}' in juser
