"""PII screening: prompt assembly, verdict parsing, chunking, audit trail.

Detector output must follow the strict schema ``Y,{a,b}`` / ``N,{}`` (JSON
stage: ``Y,{a (example),b (example)}``).  Raw output is post-processed in
four stages: (1) format parsing tolerating minor variants, (2) canonical
label mapping (case-insensitive exact, then simplified), (3) a
conservative fuzzy fallback, and (4) a safe fallback that downgrades a
flagged verdict carrying no types.  Oversized payloads are screened in
overlapping chunks whose verdicts merge order-independently.
"""

from __future__ import annotations

import csv
import difflib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .adapters import DetectorAdapter
from .extraction import JsonPayload
from .lexicon import Lexicon
from .util import sha256_hex

logger = logging.getLogger(__name__)

PARSE_STATUSES = ("exact", "variant_accepted", "fuzzy_mapped", "safe_fallback", "unparseable")
_STATUS_RANK = {status: rank for rank, status in enumerate(PARSE_STATUSES)}

MAX_ADAPTER_OUTPUT_CHARS = 4096
CHUNK_SIZE = 50_000
CHUNK_OVERLAP = 5_000


# ============================================================
# Prompts
# ============================================================

UI_SYSTEM_PROMPT = """\
You are a PII detection assistant.
Reasoning: high
ALWAYS answer in exactly the format below:
Y,{comma_separated_PII_TYPES}  OR  N,{}
NEVER include explanations or extra text.
Use only labels exactly as listed in PII_TYPES (verbatim strings).
Only flag the USER PII, not website or company information."""

UI_USER_TEMPLATE = """\
PII_TYPES = {{{pii_types}}}
Does the OCR text below from a website UI contain any of the user PII from PII_TYPES and if so, which ones.
Give me results as Y,{{comma separated PII_TYPES}} for detected PII and N,{{}} for not detected PII.
Make sure to only flag the USER PII and not website or company information:"

OCR:
{ocr_text}

Answer:
"""

JSON_SYSTEM_PROMPT = """\
You are a PII detection assistant.
Reasoning: high
ALWAYS answer in exactly the format below:
Y,{label1 (example1),label2 (example2),...} OR N,{}
For each flagged label, include exactly one example value in parentheses from the JSON snippet.
NEVER include explanations or extra text.
Use only labels exactly as listed in PII_TYPES (verbatim strings).
Only flag the USER PII, not website or company information."""

JSON_USER_TEMPLATE = """\
PII_TYPES = {{{pii_types}}}
Below is a numbered list of ONLY JSON snippet(s) extracted from a HAR or HTML capture.
Does any snippet contain any of the user PII from PII_TYPES and if so, which ones.
Give me results as Y,{{{{label1 (example1),label2 (example2)}}}} for detected PII and N,{{{{}}}} for not detected PII.
For each flagged label, include exactly one example value in parentheses from the JSON snippet.
Make sure to only flag the USER PII and not website or company information:"

RESPONSES:
{resp}

Answer:
"""


def format_pii_types(lexicon: Lexicon) -> str:
    return ",".join(lexicon.labels)


def build_ui_prompts(ocr_text: str, lexicon: Lexicon) -> tuple[str, str]:
    user = UI_USER_TEMPLATE.format(pii_types=format_pii_types(lexicon), ocr_text=ocr_text)
    return UI_SYSTEM_PROMPT, user


def build_json_prompts(snippet_text: str, lexicon: Lexicon) -> tuple[str, str]:
    resp = f"1. {snippet_text}"
    user = JSON_USER_TEMPLATE.format(pii_types=format_pii_types(lexicon), resp=resp)
    return JSON_SYSTEM_PROMPT, user


def prompts_hash(system_prompt: str, user_prompt: str) -> str:
    return sha256_hex(system_prompt + "\x00" + user_prompt)


# ============================================================
# Verdict type
# ============================================================


@dataclass
class PiiVerdict:
    item_id: str
    stage: str  # ui | json
    flagged: bool
    pii_types: set[str]
    raw_output: str
    parse_status: str
    examples_by_type: dict[str, str] | None = None
    prompts_hash: str = ""
    adapter: str = ""

    def to_row(self) -> dict:
        return {
            "item_id": self.item_id,
            "stage": self.stage,
            "flagged": self.flagged,
            "pii_types": sorted(self.pii_types),
            "parse_status": self.parse_status,
            "raw_output": self.raw_output,
            "prompts_hash": self.prompts_hash,
            "adapter": self.adapter,
            "examples_by_type": self.examples_by_type,
        }

    @classmethod
    def from_row(cls, row: dict) -> "PiiVerdict":
        return cls(
            item_id=row["item_id"],
            stage=row["stage"],
            flagged=bool(row["flagged"]),
            pii_types=set(row["pii_types"]),
            raw_output=row.get("raw_output", ""),
            parse_status=row["parse_status"],
            examples_by_type=row.get("examples_by_type"),
            prompts_hash=row.get("prompts_hash", ""),
            adapter=row.get("adapter", ""),
        )


# ============================================================
# Verdict parsing
# ============================================================


@dataclass(frozen=True)
class FuzzyConfig:
    w_ratio: float = 0.5
    w_jaccard: float = 0.4
    w_bonus: float = 0.1
    accept: float = 0.82
    margin: float = 0.05


_WORD_SPLIT = re.compile(r"\W+")
_HEAD_RE = re.compile(r"([YNyn])\s*,\s*(.*)", re.S)
_PUNCT_STRIP = re.compile(r"[^\w\s]")


def _simplify(label: str) -> str:
    """Lowercase, punctuation and hyphens removed (not replaced), spaces collapsed."""
    return " ".join(_PUNCT_STRIP.sub("", label.casefold()).split())


def fuzzy_score(candidate: str, label: str, config: FuzzyConfig = FuzzyConfig()) -> float:
    a = candidate.casefold().strip()
    b = label.casefold()
    ratio = difflib.SequenceMatcher(None, a, b).ratio()
    words_a = {w for w in _WORD_SPLIT.split(a) if w}
    words_b = {w for w in _WORD_SPLIT.split(b) if w}
    union = words_a | words_b
    jaccard = len(words_a & words_b) / len(union) if union else 0.0
    bonus = 1.0 if (a and b and (a in b or b in a)) else 0.0
    return config.w_ratio * ratio + config.w_jaccard * jaccard + config.w_bonus * bonus


def _fuzzy_lookup(candidate: str, lexicon: Lexicon, config: FuzzyConfig) -> str | None:
    scored = sorted(
        ((fuzzy_score(candidate, label, config), label) for label in lexicon.labels),
        reverse=True,
    )
    best_score, best_label = scored[0]
    runner_up = scored[1][0] if len(scored) > 1 else 0.0
    if best_score >= config.accept and (best_score - runner_up) >= config.margin:
        return best_label
    return None


def _split_schema_args(inner: str) -> list[str]:
    """Split the brace body on commas, ignoring commas inside parentheses."""
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in inner:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def _split_example(token: str) -> tuple[str, str | None]:
    token = token.strip()
    if token.endswith(")") and "(" in token:
        idx = token.rindex("(")
        return token[:idx].strip(), token[idx + 1:-1]
    return token, None


@dataclass
class ParsedVerdict:
    flagged: bool
    pii_types: set[str]
    parse_status: str
    examples_by_type: dict[str, str] = field(default_factory=dict)


def parse_verdict_full(raw_output: str, lexicon: Lexicon,
                       fuzzy: FuzzyConfig = FuzzyConfig()) -> ParsedVerdict:
    simplified_map = _simplified_map(lexicon)
    text = raw_output[:MAX_ADAPTER_OUTPUT_CHARS]
    s = text.strip()
    variant = s != text  # stray surrounding whitespace

    while s.endswith("."):
        s = s[:-1].rstrip()
        variant = True

    match = _HEAD_RE.fullmatch(s)
    if not match:
        return ParsedVerdict(False, set(), "unparseable")
    head, rest = match.group(1), match.group(2).strip()
    if head.islower():
        variant = True
    if rest.startswith("{") and rest.endswith("}"):
        inner = rest[1:-1]
    elif rest.startswith("{"):
        inner, variant = rest[1:], True
    elif rest.endswith("}"):
        inner, variant = rest[:-1], True
    else:
        inner, variant = rest, True

    if head.upper() == "N":
        status = "variant_accepted" if variant else "exact"
        return ParsedVerdict(False, set(), status)

    mapped: dict[str, str | None] = {}
    fuzzy_used = False
    for token in _split_schema_args(inner):
        label_text, example = _split_example(token)
        if not label_text:
            continue
        canonical = lexicon.canonical(label_text)
        if canonical is None:
            canonical = simplified_map.get(_simplify(label_text))
        if canonical is None:
            canonical = _fuzzy_lookup(label_text, lexicon, fuzzy)
            if canonical is not None:
                fuzzy_used = True
        if canonical is None:
            logger.debug("dropped unmappable label %r", label_text)
            continue
        if canonical not in mapped or mapped[canonical] is None:
            mapped[canonical] = example

    if not mapped:
        return ParsedVerdict(False, set(), "safe_fallback")
    if fuzzy_used:
        status = "fuzzy_mapped"
    elif variant:
        status = "variant_accepted"
    else:
        status = "exact"
    examples = {label: ex for label, ex in mapped.items() if ex is not None}
    return ParsedVerdict(True, set(mapped), status, examples)


def parse_verdict(raw_output: str, lexicon: Lexicon,
                  fuzzy: FuzzyConfig = FuzzyConfig()) -> tuple[bool, set[str], str]:
    parsed = parse_verdict_full(raw_output, lexicon, fuzzy)
    return parsed.flagged, parsed.pii_types, parsed.parse_status


_SIMPLIFIED_CACHE: dict[int, dict[str, str]] = {}


def _simplified_map(lexicon: Lexicon) -> dict[str, str]:
    cached = _SIMPLIFIED_CACHE.get(id(lexicon))
    if cached is None:
        cached = {_simplify(label): label for label in lexicon.labels}
        _SIMPLIFIED_CACHE[id(lexicon)] = cached
    return cached


# ============================================================
# Screening
# ============================================================


def _invoke(adapter: DetectorAdapter, system: str, user: str) -> tuple[str, bool]:
    """Returns (raw_output, ok)."""
    try:
        return adapter.invoke(system, user), True
    except Exception as exc:
        logger.warning("adapter %s failed: %s", getattr(adapter, "name", "?"), exc)
        return f"<adapter-error: {exc}>", False


def screen_ui(text: str, lexicon: Lexicon, adapter: DetectorAdapter,
              item_id: str = "", fuzzy: FuzzyConfig = FuzzyConfig()) -> PiiVerdict:
    """Screen one UI text through the detector."""
    if not text:
        raise ValueError("UI text must be non-empty")
    system, user = build_ui_prompts(text, lexicon)
    raw, ok = _invoke(adapter, system, user)
    if ok:
        parsed = parse_verdict_full(raw, lexicon, fuzzy)
    else:
        parsed = ParsedVerdict(False, set(), "unparseable")
    return PiiVerdict(
        item_id=item_id,
        stage="ui",
        flagged=parsed.flagged,
        pii_types=parsed.pii_types,
        raw_output=raw[:MAX_ADAPTER_OUTPUT_CHARS],
        parse_status=parsed.parse_status,
        examples_by_type=None,
        prompts_hash=prompts_hash(system, user),
        adapter=getattr(adapter, "name", "unknown"),
    )


def chunk_text(text: str, size: int = CHUNK_SIZE, overlap: int = CHUNK_OVERLAP) -> list[str]:
    """Overlapping chunks covering the text; single chunk when it fits."""
    if size <= overlap:
        raise ValueError("chunk size must exceed overlap")
    if len(text) <= size:
        return [text]
    stride = size - overlap
    chunks = []
    start = 0
    while True:
        chunks.append(text[start:start + size])
        if start + size >= len(text):
            return chunks
        start += stride


def merge_chunk_verdicts(parsed_chunks: list[tuple[int, ParsedVerdict, str]]) -> tuple[ParsedVerdict, str]:
    """Merge per-chunk results into one verdict, independent of arrival order.

    Types union; flagged if any chunk flagged; examples keep the first per
    label by chunk position; parse_status is the deepest technique any
    chunk needed; raw outputs join in chunk order.
    """
    ordered = sorted(parsed_chunks, key=lambda item: item[0])
    flagged = any(p.flagged for _, p, _ in ordered)
    types: set[str] = set()
    examples: dict[str, str] = {}
    status = "exact"
    raws = []
    for index, parsed, raw in ordered:
        types |= parsed.pii_types
        for label, example in parsed.examples_by_type.items():
            examples.setdefault(label, example)
        if _STATUS_RANK[parsed.parse_status] > _STATUS_RANK[status]:
            status = parsed.parse_status
        raws.append(f"[chunk {index}] {raw}")
    merged = ParsedVerdict(flagged, types, status, examples)
    return merged, "\n".join(raws)


def screen_payload(payload: JsonPayload, lexicon: Lexicon, adapter: DetectorAdapter,
                   item_id: str = "", fuzzy: FuzzyConfig = FuzzyConfig(),
                   chunk_size: int = CHUNK_SIZE,
                   chunk_overlap: int = CHUNK_OVERLAP) -> PiiVerdict:
    """Screen one canonical JSON payload, chunking when oversized."""
    text = payload.canonical_text
    if not text:
        raise ValueError("payload canonical_text must be available")
    item_id = item_id or "p" + payload.content_hash[:12]
    chunks = chunk_text(text, chunk_size, chunk_overlap)

    results: list[tuple[int, ParsedVerdict, str]] = []
    hashes = []
    for index, chunk in enumerate(chunks):
        system, user = build_json_prompts(chunk, lexicon)
        hashes.append(prompts_hash(system, user))
        raw, ok = _invoke(adapter, system, user)
        raw = raw[:MAX_ADAPTER_OUTPUT_CHARS]
        if ok:
            results.append((index, parse_verdict_full(raw, lexicon, fuzzy), raw))
        else:
            results.append((index, ParsedVerdict(False, set(), "unparseable"), raw))

    merged, raw_joined = merge_chunk_verdicts(results)
    if len(chunks) == 1:
        raw_joined = results[0][2]
    return PiiVerdict(
        item_id=item_id,
        stage="json",
        flagged=merged.flagged,
        pii_types=merged.pii_types,
        raw_output=raw_joined,
        parse_status=merged.parse_status,
        examples_by_type=merged.examples_by_type or None,
        prompts_hash=sha256_hex("\x00".join(hashes)) if len(hashes) > 1 else hashes[0],
        adapter=getattr(adapter, "name", "unknown"),
    )


# ============================================================
# Audit trail
# ============================================================

CSV_COLUMNS = ("item_id", "stage", "flagged", "pii_types", "parse_status")


def write_audit(verdicts: Iterable[PiiVerdict], csv_path: Path | str,
                jsonl_path: Path | str, append: bool = False) -> int:
    """Write the compact CSV and the rich JSONL audit trail."""
    verdicts = list(verdicts)
    csv_path, jsonl_path = Path(csv_path), Path(jsonl_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    jsonl_path.parent.mkdir(parents=True, exist_ok=True)

    mode = "a" if append and csv_path.exists() else "w"
    with open(csv_path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(CSV_COLUMNS)
        for v in verdicts:
            writer.writerow([
                v.item_id, v.stage, str(v.flagged).lower(),
                ";".join(sorted(v.pii_types)), v.parse_status,
            ])

    jmode = "a" if append and jsonl_path.exists() else "w"
    with open(jsonl_path, jmode, encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_row(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(verdicts)


def read_audit_jsonl(jsonl_path: Path | str) -> list[PiiVerdict]:
    path = Path(jsonl_path)
    if not path.is_file():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(PiiVerdict.from_row(json.loads(line)))
    return out
