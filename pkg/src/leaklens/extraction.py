"""Candidate JSON payload extraction from HAR logs and HTML snapshots.

Payloads come from network response bodies (JSON directly, JSONP via a
single-wrapper unwrap, HTML bodies re-scanned) and from HTML script
elements: ld+json / application/json / manifest blocks, the __NEXT_DATA__
blob, and inline assignments whose right-hand side is strict JSON.  Every
payload is canonicalized and deduplicated corpus-wide by SHA-256.

UI text resolution prefers a sidecar file and falls back to a pluggable
image-text adapter; the extraction engine itself is out of scope.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Protocol

from .capture import ArtifactBundle
from .util import canonical_json, parse_strict_json, read_jsonl, sha256_hex, write_jsonl

logger = logging.getLogger(__name__)

PAYLOAD_SOURCES = (
    "har_response",
    "har_jsonp",
    "html_ldjson",
    "html_appjson",
    "html_manifest",
    "html_next_data",
    "html_inline_assignment",
)


class ExtractionError(ValueError):
    pass


# ============================================================
# Types
# ============================================================


@dataclass(frozen=True)
class JsonPayload:
    bundle_id: str
    source: str
    canonical_text: str
    content_hash: str
    origin_locator: str


@dataclass(frozen=True)
class UiText:
    bundle_id: str
    text: str
    provider: str  # sidecar | adapter
    confidence: float | None = None


@dataclass
class UiTextResolution:
    status: str  # ok | no_ui_text | adapter_error
    ui_text: UiText | None = None
    error: str | None = None


@dataclass
class ExtractionStats:
    bodies_seen: int = 0
    bodies_skipped: int = 0
    payloads_found: int = 0


class TextExtractionAdapter(Protocol):
    """Pluggable image→text engine for bundles lacking a sidecar."""

    name: str

    def extract(self, image_path: str) -> tuple[str, float | None]: ...


# ============================================================
# Canonicalization
# ============================================================


def canonicalize(json_text: str) -> tuple[str, str]:
    """Parse and re-serialize to the canonical form; returns (text, hash).

    Keys sorted at every level, no insignificant whitespace, NFC strings,
    shortest round-trip numbers with int/float distinctness preserved.
    """
    value = parse_strict_json(json_text)
    text = canonical_json(value)
    return text, sha256_hex(text)


# ============================================================
# HAR extraction
# ============================================================

_JSON_MIME = re.compile(r"^(application|text)/(json|[\w.+-]*\+json)\s*(;.*)?$", re.I)
_JS_MIME = re.compile(r"^(application|text)/(x-)?(java|ecma)script\s*(;.*)?$", re.I)
_HTML_MIME = re.compile(r"^text/html\s*(;.*)?$", re.I)

_JSONP_RE = re.compile(
    r"^\s*[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*\(\s*(.*?)\s*\)\s*;?\s*$",
    re.S,
)


def unwrap_jsonp(body: str) -> str | None:
    """Strip exactly one ``callback( ... )`` wrapper; None if not JSONP-shaped."""
    match = _JSONP_RE.match(body)
    return match.group(1) if match else None


def _entry_body(entry: dict) -> str | None:
    content = entry.get("response", {}).get("content", {})
    text = content.get("text")
    if text is None:
        return None
    if content.get("encoding") == "base64":
        try:
            return base64.b64decode(text).decode("utf-8", "replace")
        except (binascii.Error, ValueError):
            return None
    return text


def extract_from_har(har_path: Path | str, bundle_id: str = "",
                     stats: ExtractionStats | None = None) -> list[JsonPayload]:
    """Pull candidate payloads out of a HAR 1.2 log, selecting by Content-Type."""
    stats = stats if stats is not None else ExtractionStats()
    try:
        har = parse_strict_json(Path(har_path).read_text("utf-8"))
        entries = har["log"]["entries"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ExtractionError(f"{har_path}: malformed HAR ({exc})") from exc

    payloads: list[JsonPayload] = []
    for entry in entries:
        mime = str(entry.get("response", {}).get("content", {}).get("mimeType", ""))
        body = _entry_body(entry)
        if body is None:
            continue
        request_url = entry.get("request", {}).get("url", "")
        stats.bodies_seen += 1
        if _JSON_MIME.match(mime):
            try:
                text, digest = canonicalize(body)
            except ValueError:
                stats.bodies_skipped += 1
                continue
            payloads.append(JsonPayload(bundle_id, "har_response", text, digest, request_url))
        elif _JS_MIME.match(mime):
            inner = unwrap_jsonp(body)
            if inner is None:
                stats.bodies_skipped += 1
                continue
            try:
                text, digest = canonicalize(inner)
            except ValueError:
                stats.bodies_skipped += 1
                continue
            payloads.append(JsonPayload(bundle_id, "har_jsonp", text, digest, request_url))
        elif _HTML_MIME.match(mime):
            nested = extract_from_html(body, bundle_id,
                                       origin_prefix=f"{request_url}#", stats=stats)
            payloads.extend(nested)
        else:
            stats.bodies_skipped += 1
    stats.payloads_found += len(payloads)
    return payloads


# ============================================================
# HTML extraction
# ============================================================


class _ScriptCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.scripts: list[tuple[dict[str, str | None], str]] = []
        self._attrs: dict[str, str | None] | None = None
        self._chunks: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "script":
            self._attrs = dict(attrs)
            self._chunks = []

    def handle_endtag(self, tag):
        if tag == "script" and self._attrs is not None:
            self.scripts.append((self._attrs, "".join(self._chunks)))
            self._attrs = None

    def handle_data(self, data):
        if self._attrs is not None:
            self._chunks.append(data)


# window.cfg = {...};  /  cfg = {...};  at top statement level.
_ASSIGNMENT_RE = re.compile(
    r"(?:^|[;\n])\s*(?:window\.)?[A-Za-z_$][\w$]*\s*=\s*(?=[\[{])",
)


def _inline_assignment_payloads(script_body: str) -> list[str]:
    """Strict-JSON right-hand sides of top-level assignments.

    The RHS must parse as a JSON object or array in one attempt; anything
    needing JS evaluation is skipped.
    """
    decoder = json.JSONDecoder()
    out: list[str] = []
    for match in _ASSIGNMENT_RE.finditer(script_body):
        start = match.end()
        try:
            value, end = decoder.raw_decode(script_body, start)
        except ValueError:
            continue
        tail = script_body[end:].lstrip(" \t")
        if tail[:1] not in (";", "", "\n"):
            continue  # expression continues: not a plain assignment
        out.append(script_body[start:end])
    return out


def extract_from_html(html_text: str, bundle_id: str = "", *,
                      origin_prefix: str = "",
                      stats: ExtractionStats | None = None) -> list[JsonPayload]:
    """Scan script elements for embedded JSON payloads."""
    stats = stats if stats is not None else ExtractionStats()
    collector = _ScriptCollector()
    collector.feed(html_text)
    collector.close()

    payloads: list[JsonPayload] = []

    def add(source: str, raw: str, locator: str) -> None:
        try:
            text, digest = canonicalize(raw)
        except ValueError:
            stats.bodies_skipped += 1
            return
        payloads.append(JsonPayload(bundle_id, source, text, digest,
                                    origin_prefix + locator))

    for index, (attrs, body) in enumerate(collector.scripts):
        script_type = (attrs.get("type") or "").strip().lower()
        script_id = attrs.get("id") or ""
        locator = f"script[{index}]"
        if script_id == "__NEXT_DATA__":
            stats.bodies_seen += 1
            add("html_next_data", body, locator)
        elif script_type == "application/ld+json":
            stats.bodies_seen += 1
            add("html_ldjson", body, locator)
        elif script_type == "application/manifest+json":
            stats.bodies_seen += 1
            add("html_manifest", body, locator)
        elif script_type == "application/json":
            stats.bodies_seen += 1
            add("html_appjson", body, locator)
        elif script_type in ("", "text/javascript", "application/javascript", "module"):
            for rhs_index, rhs in enumerate(_inline_assignment_payloads(body)):
                stats.bodies_seen += 1
                add("html_inline_assignment", rhs, f"{locator}.assign[{rhs_index}]")
    stats.payloads_found += len(payloads)
    return payloads


# ============================================================
# Per-bundle extraction + payload index
# ============================================================


def extract_for_bundle(bundle: ArtifactBundle,
                       stats: ExtractionStats | None = None) -> list[JsonPayload]:
    """All payloads for one bundle: HAR first, then the HTML snapshot."""
    stats = stats if stats is not None else ExtractionStats()
    payloads: list[JsonPayload] = []
    if bundle.har_path:
        payloads.extend(extract_from_har(bundle.har_path, bundle.bundle_id, stats))
    if bundle.html_path:
        html_text = Path(bundle.html_path).read_text("utf-8", errors="replace")
        payloads.extend(extract_from_html(html_text, bundle.bundle_id,
                                          origin_prefix="html#", stats=stats))
    return payloads


class PayloadIndex:
    """Corpus-wide payload store deduplicated by content hash.

    Each distinct canonical payload is stored once under its first-seen
    bundle; later bundles carrying the same payload are linked, not
    re-stored.
    """

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._rows: list[dict] = []
        self._by_hash: dict[str, dict] = {}
        if self.path.is_file():
            for row in read_jsonl(self.path):
                self._rows.append(row)
                self._by_hash[row["hash"]] = row

    def add(self, payload: JsonPayload) -> bool:
        """Add a payload; returns False when deduplicated against an existing one."""
        row = self._by_hash.get(payload.content_hash)
        if row is not None:
            linked = row.setdefault("linked_bundle_ids", [row["bundle_id"]])
            if payload.bundle_id not in linked:
                linked.append(payload.bundle_id)
            return False
        row = {
            "bundle_id": payload.bundle_id,
            "source": payload.source,
            "hash": payload.content_hash,
            "origin": payload.origin_locator,
            "json": payload.canonical_text,
            "linked_bundle_ids": [payload.bundle_id],
        }
        self._rows.append(row)
        self._by_hash[payload.content_hash] = row
        return True

    def save(self) -> None:
        write_jsonl(self.path, self._rows)

    def all(self) -> list[JsonPayload]:
        return [self._to_payload(row) for row in self._rows]

    def payloads_for(self, bundle_id: str) -> list[JsonPayload]:
        out = []
        for row in self._rows:
            if bundle_id in row.get("linked_bundle_ids", [row["bundle_id"]]):
                out.append(self._to_payload(row))
        return out

    @staticmethod
    def _to_payload(row: dict) -> JsonPayload:
        return JsonPayload(
            bundle_id=row["bundle_id"],
            source=row["source"],
            canonical_text=row["json"],
            content_hash=row["hash"],
            origin_locator=row["origin"],
        )

    def __len__(self) -> int:
        return len(self._rows)


# ============================================================
# UI text resolution
# ============================================================


def resolve_ui_text(bundle: ArtifactBundle,
                    adapter: TextExtractionAdapter | None = None) -> UiTextResolution:
    """Resolve the bundle's UI text: sidecar preferred, adapter fallback."""
    if bundle.ui_text_path:
        try:
            text = Path(bundle.ui_text_path).read_text("utf-8")
        except OSError as exc:
            return UiTextResolution("adapter_error", error=f"sidecar unreadable: {exc}")
        return UiTextResolution("ok", UiText(bundle.bundle_id, text, "sidecar"))
    if bundle.ui_image_path and adapter is not None:
        try:
            text, confidence = adapter.extract(bundle.ui_image_path)
        except Exception as exc:  # adapter contract: any failure routes to JSON stage
            logger.warning("%s: text adapter failed: %s", bundle.bundle_id, exc)
            return UiTextResolution("adapter_error", error=str(exc))
        return UiTextResolution("ok", UiText(bundle.bundle_id, text, "adapter", confidence))
    return UiTextResolution("no_ui_text")
