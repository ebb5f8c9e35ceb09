"""Post-validation analyses: exposure time, profiles, access, privilege, overfetch.

All operations are pure over a bundle snapshot plus the validated set.
Raw PII values feed the access/privilege searches transiently and are
never persisted — outputs carry types, classes, and locators only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from html.parser import HTMLParser
from pathlib import Path

from .capture import ArtifactBundle
from .corpus import UrlRecord
from .lexicon import NAME_LABELS
from .triage import ValidatedRecord
from .util import format_timestamp, parse_strict_json

logger = logging.getLogger(__name__)

DAYS_PER_YEAR = 365.25
SECONDS_PER_DAY = 86400

ACCESS_CLASSES = ("url_embedded", "websocket", "api", "server_rendered")
PRIVILEGE_CLASSES = ("editable", "static_ui", "static_json")


# ============================================================
# Exposure time
# ============================================================


@dataclass
class ExposureRecord:
    url_id: str
    bundle_id: str
    delivery_at: datetime
    crawled_at: datetime
    exposure_days: int
    bucket: str


def exposure_bucket(days: int) -> str:
    band = int(days // DAYS_PER_YEAR)
    return f"{band}–{band + 1} years"


def exposure_time(validated: list[ValidatedRecord],
                  bundles: dict[str, ArtifactBundle],
                  urls: dict[str, UrlRecord]) -> tuple[list[ExposureRecord], dict[str, int], list[str]]:
    """Per-URL exposure (a lower bound) plus a 1-year-bucket histogram.

    Records lacking message linkage, or crawled before delivery, are
    excluded with a warning.
    """
    records: list[ExposureRecord] = []
    histogram: dict[str, int] = {}
    warnings: list[str] = []
    for item in sorted(validated, key=lambda r: r.bundle_id):
        bundle = bundles.get(item.bundle_id)
        url = urls.get(item.url_id)
        if bundle is None or url is None:
            warnings.append(f"{item.bundle_id}: no delivery timestamp (unlinked URL); excluded")
            continue
        delta_s = (bundle.crawled_at - url.first_seen_at).total_seconds()
        if delta_s < 0:
            warnings.append(f"{item.bundle_id}: delivered after crawl; excluded")
            continue
        days = int(math.floor(delta_s / SECONDS_PER_DAY))
        bucket = exposure_bucket(days)
        records.append(ExposureRecord(item.url_id, item.bundle_id,
                                      url.first_seen_at, bundle.crawled_at,
                                      days, bucket))
        histogram[bucket] = histogram.get(bucket, 0) + 1
    for message in warnings:
        logger.warning(message)
    return records, histogram, warnings


def write_exposure_csv(records: list[ExposureRecord], path: Path | str) -> None:
    _write_csv(path,
               ["url_id", "bundle_id", "delivery_at", "crawled_at", "exposure_days", "bucket"],
               [[r.url_id, r.bundle_id, format_timestamp(r.delivery_at),
                 format_timestamp(r.crawled_at), r.exposure_days, r.bucket]
                for r in records])


# ============================================================
# User profiles
# ============================================================


@dataclass
class UserProfile:
    url_id: str
    pii_type_set: tuple[str, ...]
    profile_key: str


def qualifies_as_profile(types: set[str], contact_labels: frozenset[str]) -> bool:
    return bool(types & NAME_LABELS) and bool(types & contact_labels)


def build_profiles(validated: list[ValidatedRecord],
                   contact_labels: frozenset[str]) -> list[UserProfile]:
    """Unique profiles from qualifying validated URLs.

    A URL qualifies when its types include a name (first or last) and at
    least one contact type; identical type sets collapse to one profile.
    """
    profiles: dict[str, UserProfile] = {}
    for item in sorted(validated, key=lambda r: r.bundle_id):
        types = set(item.pii_types)
        if not qualifies_as_profile(types, contact_labels):
            continue
        ordered = tuple(sorted(types))
        key = "|".join(ordered)
        if key not in profiles:
            profiles[key] = UserProfile(item.url_id, ordered, key)
    return list(profiles.values())


def write_profiles_csv(profiles: list[UserProfile], path: Path | str) -> None:
    _write_csv(path, ["profile_key", "url_id", "pii_types"],
               [[p.profile_key, p.url_id, ";".join(p.pii_type_set)]
                for p in sorted(profiles, key=lambda p: p.profile_key)])


# ============================================================
# Initial access classification
# ============================================================


@dataclass
class AccessClassification:
    url_id: str
    cls: str
    evidence_locator: str


_HTML_MIME_HINT = ("text/html", "application/xhtml")


def _is_document(entry: dict) -> bool:
    mime = str(entry.get("response", {}).get("content", {}).get("mimeType", ""))
    return any(mime.lower().startswith(h) for h in _HTML_MIME_HINT)


def _entry_text(entry: dict) -> str:
    content = entry.get("response", {}).get("content", {})
    text = content.get("text") or ""
    headers = entry.get("response", {}).get("headers", [])
    header_text = " ".join(f"{h.get('name', '')}: {h.get('value', '')}" for h in headers)
    return f"{text}\n{header_text}"


def classify_access(bundle: ArtifactBundle, pii_values: list[str],
                    url_id: str = "") -> AccessClassification | None:
    """Where an unauthenticated visitor first meets the PII.

    Precedence url_embedded > websocket > api > server_rendered; within a
    class the latest matching response wins (responses are stepped through
    in reverse chronological order).  Returns None (with a warning) when
    no value is found anywhere.
    """
    url_id = url_id or bundle.url_id
    values = [v for v in pii_values if v]
    if not values:
        logger.warning("%s: no PII values to classify", bundle.bundle_id)
        return None

    # url_embedded: original URL, hop URLs, redirect headers.
    for value in values:
        if value in bundle.url:
            return AccessClassification(url_id, "url_embedded", "original-url")
        for hop in bundle.redirect_chain:
            if value in hop.url or any(value in hv for hv in hop.headers.values()):
                return AccessClassification(url_id, "url_embedded", f"redirect:{hop.url}")

    entries: list[dict] = []
    if bundle.har_path:
        try:
            har = parse_strict_json(Path(bundle.har_path).read_text("utf-8"))
            entries = list(har["log"]["entries"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            logger.warning("%s: unreadable HAR for access classification: %s",
                           bundle.bundle_id, exc)

    # websocket: socket frame records.
    for entry in reversed(entries):
        for frame in entry.get("_webSocketMessages", []):
            data = str(frame.get("data", ""))
            if any(value in data for value in values):
                locator = entry.get("request", {}).get("url", "websocket")
                return AccessClassification(url_id, "websocket", f"socket:{locator}")

    # api: non-document responses, latest first.
    for entry in reversed(entries):
        if _is_document(entry) or entry.get("_webSocketMessages"):
            continue
        text = _entry_text(entry)
        if any(value in text for value in values):
            locator = entry.get("request", {}).get("url", "")
            return AccessClassification(url_id, "api", f"api:{locator}")

    # server_rendered: the main document (or the HTML snapshot without a HAR).
    for entry in reversed(entries):
        if not _is_document(entry):
            continue
        if any(value in _entry_text(entry) for value in values):
            locator = entry.get("request", {}).get("url", "")
            return AccessClassification(url_id, "server_rendered", f"document:{locator}")
    if not entries and bundle.html_path:
        try:
            html_text = Path(bundle.html_path).read_text("utf-8", errors="replace")
        except OSError:
            html_text = ""
        if any(value in html_text for value in values):
            return AccessClassification(url_id, "server_rendered", "html-snapshot")

    logger.warning("%s: PII values not found in any artifact; unclassified",
                   bundle.bundle_id)
    return None


def write_access_csv(rows: list[tuple[str, AccessClassification]], path: Path | str) -> None:
    _write_csv(path, ["bundle_id", "url_id", "class", "evidence_locator"],
               [[bundle_id, c.url_id, c.cls, c.evidence_locator]
                for bundle_id, c in sorted(rows, key=lambda r: r[0])])


# ============================================================
# Privileged exposure
# ============================================================


class _FormAndTextCollector(HTMLParser):
    """Collects prefilled form-control values and rendered text."""

    _SKIP_TEXT = {"script", "style", "noscript", "template"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.control_values: list[str] = []
        self.text_chunks: list[str] = []
        self._stack: list[str] = []
        self._capture_control: str | None = None

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        self._stack.append(tag)
        if tag == "input":
            if (attrs.get("type") or "text").lower() != "hidden" and attrs.get("value"):
                self.control_values.append(attrs["value"])
            self._stack.pop()  # void element
        elif tag == "textarea":
            self._capture_control = "textarea"
        elif tag == "option" and "selected" in attrs:
            self._capture_control = "option"

    def handle_endtag(self, tag):
        while self._stack and self._stack.pop() != tag:
            pass
        if tag in ("textarea", "option"):
            self._capture_control = None

    def handle_data(self, data):
        if self._capture_control:
            if data.strip():
                self.control_values.append(data.strip())
            return
        if not (set(self._stack) & self._SKIP_TEXT) and data.strip():
            self.text_chunks.append(data)


def privileged_exposure(bundle: ArtifactBundle, pii_values: list[str],
                        ui_text: str = "") -> str:
    """editable > static_ui > static_json, judged from the HTML snapshot."""
    values = [v for v in pii_values if v]
    if not bundle.html_path or not values:
        return "static_json"
    try:
        html_text = Path(bundle.html_path).read_text("utf-8", errors="replace")
    except OSError:
        return "static_json"
    collector = _FormAndTextCollector()
    collector.feed(html_text)
    collector.close()
    for control_value in collector.control_values:
        if any(value in control_value for value in values):
            return "editable"
    rendered = "\n".join(collector.text_chunks) + "\n" + ui_text
    if any(value in rendered for value in values):
        return "static_ui"
    return "static_json"


def write_privilege_csv(rows: list[tuple[str, str, str]], path: Path | str) -> None:
    _write_csv(path, ["bundle_id", "url_id", "class"],
               [list(r) for r in sorted(rows)])


# ============================================================
# Overfetch
# ============================================================


@dataclass
class OverfetchFinding:
    url_id: str
    ui_pii: set[str] = field(default_factory=set)
    payload_pii: set[str] = field(default_factory=set)

    @property
    def overfetched(self) -> set[str]:
        return self.payload_pii - self.ui_pii


def overfetch_diff(ui_types: set[str], payload_types: set[str],
                   url_id: str = "") -> OverfetchFinding:
    """What the network carried beyond what the UI displayed."""
    return OverfetchFinding(url_id, set(ui_types), set(payload_types))


def write_overfetch_csv(rows: list[tuple[str, OverfetchFinding]], path: Path | str) -> None:
    _write_csv(path, ["bundle_id", "url_id", "ui_pii", "payload_pii", "overfetched"],
               [[bundle_id, f.url_id,
                 ";".join(sorted(f.ui_pii)), ";".join(sorted(f.payload_pii)),
                 ";".join(sorted(f.overfetched))]
                for bundle_id, f in sorted(rows, key=lambda r: r[0])])


# ============================================================
# Token analysis CSV
# ============================================================


def write_tokens_csv(rows: list[tuple[str, "TokenAnalysis"]], path: Path | str) -> None:
    from .tokens import TokenAnalysis  # noqa: F401 (typing only)

    _write_csv(path,
               ["domain", "url_id", "token", "L", "alphabet_class", "A", "H",
                "flagged_low_entropy", "has_separators"],
               [[domain, t.url_id, t.token, t.L, t.alphabet_class, t.A,
                 repr(t.H), str(t.flagged_low_entropy).lower(),
                 str(t.has_separators).lower()]
                for domain, t in sorted(rows, key=lambda r: r[0])])


# ============================================================
# Shared CSV helper
# ============================================================


def _write_csv(path: Path | str, header: list[str], rows: list[list]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
