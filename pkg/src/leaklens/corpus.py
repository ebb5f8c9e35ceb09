"""Message-corpus ingestion and URL extraction.

Gateways reflow message text aggressively (line breaks, spaces, wrapping),
so URL extraction first repairs single line breaks that split a URL, then
matches well-formed http(s) URLs and strips trailing prose punctuation.
Only well-formed URLs are extracted; obfuscated forms are never guessed at.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from urllib.parse import urlsplit

from .util import (
    format_timestamp,
    parse_timestamp,
    read_jsonl,
    registrable_domain,
    sha256_hex,
    utcnow,
    write_jsonl,
)

logger = logging.getLogger(__name__)

# ============================================================
# Types
# ============================================================


@dataclass(frozen=True)
class MessageRecord:
    message_id: str
    gateway: str
    phone_number: str
    received_at: datetime
    body: str


@dataclass
class UrlRecord:
    url_id: str
    url: str
    source_message_ids: list[str]
    first_seen_at: datetime
    domain: str


@dataclass
class IngestResult:
    stored: int
    malformed: int
    warnings: list[str] = field(default_factory=list)


class CorpusError(ValueError):
    pass


# ============================================================
# URL extraction
# ============================================================

_URL_RE = re.compile(r"https?://[^\s<>\"']+", re.IGNORECASE)

# Characters that mark an obviously unfinished URL at a wrap point, and the
# characters a continuation line may begin with to force a rejoin.
_MIDURL_TAIL = set("./-_=&?%+")
_CONTINUATION_HEAD = set("./-_=&?%+")
_URL_LEGAL = re.compile(r"[A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]")

_TRAILING_PUNCT = set(".,;:!?)\"'")

_REJOIN_RE = re.compile(
    r"(https?://[^\s<>\"']*)\n([A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+)",
    re.IGNORECASE,
)


def _rejoin_wrapped(body: str) -> str:
    """Join single line breaks that split a URL.

    A break is repaired only when the fragment before it ends mid-URL (a
    separator-like final character) or the next line opens with a
    continuation-only character.  Double breaks are message structure and
    are never joined.
    """
    text = body.replace("\r\n", "\n").replace("\r", "\n")

    def join(match: re.Match) -> str:
        head, tail = match.group(1), match.group(2)
        if not head or head.endswith("//"):  # bare scheme, nothing to continue
            return match.group(0)
        if head[-1] in _MIDURL_TAIL or tail[0] in _CONTINUATION_HEAD:
            return head + tail
        return match.group(0)

    prev = None
    while prev != text:
        prev = text
        text = _REJOIN_RE.sub(join, text)
    return text


def _strip_trailing_punct(url: str) -> str:
    while url and url[-1] in _TRAILING_PUNCT:
        if url[-1] == ")" and url.count("(") >= url.count(")"):
            break  # balanced close paren belongs to the URL
        url = url[:-1]
    return url


def extract_urls(body: str) -> list[str]:
    """Return every maximal http(s) URL in a message body.

    Deduplicated preserving first-occurrence order; idempotent over its
    own output.
    """
    text = _rejoin_wrapped(body)
    seen: set[str] = set()
    out: list[str] = []
    for match in _URL_RE.finditer(text):
        url = _strip_trailing_punct(match.group(0))
        if not urlsplit(url).netloc:
            continue
        if url not in seen:
            seen.add(url)
            out.append(url)
    return out


def url_key(url: str) -> str:
    """Comparison key: scheme and host lowered, path/query case-sensitive."""
    parts = urlsplit(url)
    rest = url[len(parts.scheme) + 3 + len(parts.netloc):] if parts.scheme else url
    return f"{parts.scheme.lower()}://{parts.netloc.lower()}{rest}"


def url_id_for(url: str) -> str:
    return "u" + sha256_hex(url_key(url))[:12]


# ============================================================
# Corpus store
# ============================================================

_PHONE_RE = re.compile(r"^\+?\d{3,15}$")


def _parse_message(obj: dict, seq: int, now: datetime) -> MessageRecord:
    if not isinstance(obj, dict):
        raise CorpusError("record is not an object")
    for key in ("gateway", "phone_number", "received_at", "body"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise CorpusError(f"missing or empty field {key!r}")
    if not _PHONE_RE.match(obj["phone_number"]):
        raise CorpusError(f"bad phone_number {obj['phone_number']!r}")
    received = parse_timestamp(obj["received_at"])
    if received > now:
        raise CorpusError(f"received_at {obj['received_at']} is in the future")
    return MessageRecord(
        message_id=f"m{seq:06d}",
        gateway=obj["gateway"],
        phone_number=obj["phone_number"],
        received_at=received,
        body=obj["body"],
    )


class CorpusStore:
    """JSONL-backed message store plus derived URL records."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.messages_path = self.root / "messages.jsonl"

    # ---- ingestion ----

    def ingest(self, path: Path | str) -> IngestResult:
        """Ingest a corpus file; malformed lines are skipped with a warning."""
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"corpus file not found: {path}")
        existing = list(self.messages())
        seq = len(existing)
        now = utcnow()
        stored: list[MessageRecord] = []
        result = IngestResult(stored=0, malformed=0)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    record = _parse_message(obj, seq + len(stored) + 1, now)
                except (ValueError, CorpusError) as exc:
                    result.malformed += 1
                    msg = f"{path.name}:{lineno}: skipped malformed line ({exc})"
                    result.warnings.append(msg)
                    logger.warning(msg)
                    continue
                stored.append(record)
        write_jsonl(self.messages_path, [self._to_row(m) for m in existing + stored])
        result.stored = len(stored)
        logger.info("ingested %d messages (%d malformed) from %s",
                    result.stored, result.malformed, path)
        return result

    @staticmethod
    def _to_row(m: MessageRecord) -> dict:
        return {
            "message_id": m.message_id,
            "gateway": m.gateway,
            "phone_number": m.phone_number,
            "received_at": format_timestamp(m.received_at),
            "body": m.body,
        }

    # ---- queries ----

    def messages(self) -> list[MessageRecord]:
        if not self.messages_path.is_file():
            return []
        out = []
        for obj in read_jsonl(self.messages_path):
            out.append(MessageRecord(
                message_id=obj["message_id"],
                gateway=obj["gateway"],
                phone_number=obj["phone_number"],
                received_at=parse_timestamp(obj["received_at"]),
                body=obj["body"],
            ))
        return out

    def unique_urls(self) -> list[UrlRecord]:
        """One record per distinct URL (scheme/host case-folded identity)."""
        records: dict[str, UrlRecord] = {}
        for message in self.messages():
            for url in extract_urls(message.body):
                key = url_key(url)
                record = records.get(key)
                if record is None:
                    records[key] = UrlRecord(
                        url_id=url_id_for(url),
                        url=url,
                        source_message_ids=[message.message_id],
                        first_seen_at=message.received_at,
                        domain=registrable_domain(url),
                    )
                else:
                    if message.message_id not in record.source_message_ids:
                        record.source_message_ids.append(message.message_id)
                    if message.received_at < record.first_seen_at:
                        record.first_seen_at = message.received_at
        return list(records.values())

    def write_urls_csv(self, path: Path | str) -> int:
        records = self.unique_urls()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["url_id", "url", "domain", "first_seen_at", "source_message_ids"])
            for r in records:
                writer.writerow([
                    r.url_id, r.url, r.domain,
                    format_timestamp(r.first_seen_at),
                    ";".join(r.source_message_ids),
                ])
        return len(records)
