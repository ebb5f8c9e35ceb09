"""Shared helpers: hashing, timestamps, domains, atomic file writes.

Kept dependency-free so every other module can import it without cycles.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import unicodedata
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator
from urllib.parse import urlsplit

logger = logging.getLogger("leaklens")

# ============================================================
# Hashing
# ============================================================


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


def short_id(prefix: str, data: bytes | str, length: int = 12) -> str:
    """Stable identifier: prefix + truncated SHA-256 of the payload."""
    return f"{prefix}{sha256_hex(data)[:length]}"


# ============================================================
# Timestamps
# ============================================================

_ISO_Z = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:\d{2})$")


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime.

    Accepts a trailing ``Z`` or an explicit offset; rejects naive stamps so
    arithmetic across records is always well defined.
    """
    if not isinstance(value, str) or not _ISO_Z.match(value):
        raise ValueError(f"not an ISO-8601 UTC timestamp: {value!r}")
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


# ============================================================
# Domains
# ============================================================

# Multi-label public suffixes we care about resolving correctly without a
# full public-suffix dataset.  Anything absent falls back to the last two
# labels, which is right for com/org/net/io/test and the like.
_MULTI_LABEL_SUFFIXES = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au",
    "co.nz", "net.nz", "org.nz",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
    "com.br", "net.br", "org.br",
    "co.in", "net.in", "org.in", "gov.in",
    "com.mx", "com.ar", "com.cn", "com.tw", "com.sg", "com.hk",
    "co.za", "co.kr", "or.kr",
}


def registrable_domain(host_or_url: str) -> str:
    """Collapse a host (or URL) to its registrable domain.

    ``a.b.example.co.uk`` -> ``example.co.uk``; ``www.example.test`` ->
    ``example.test``.  IP literals and single-label hosts pass through.
    """
    host = host_or_url
    if "//" in host_or_url or host_or_url.startswith(("http:", "https:")):
        host = urlsplit(host_or_url).hostname or ""
    host = host.strip().strip(".").lower()
    if not host:
        return ""
    if re.fullmatch(r"[0-9.]+", host) or ":" in host:
        return host  # IPv4 / IPv6 literal
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if ".".join(labels[-2:]) in _MULTI_LABEL_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


# ============================================================
# Canonical JSON
# ============================================================


def _reject_nonfinite(value: str) -> float:
    raise ValueError(f"non-finite number in JSON: {value}")


def parse_strict_json(text: str) -> Any:
    """Parse JSON, rejecting the NaN/Infinity extensions."""
    return json.loads(text, parse_constant=_reject_nonfinite)


def _normalize(value: Any) -> Any:
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value)
    if isinstance(value, list):
        return [_normalize(v) for v in value]
    if isinstance(value, dict):
        return {unicodedata.normalize("NFC", str(k)): _normalize(v) for k, v in value.items()}
    return value


def canonical_json(value: Any) -> str:
    """Serialize with sorted keys, no whitespace, NFC strings.

    ``json.dumps`` already emits shortest round-trip floats (repr) and keeps
    int/float distinct, so ``[1]`` and ``[1.0]`` canonicalize differently.
    """
    return json.dumps(
        _normalize(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


# ============================================================
# Files
# ============================================================


def atomic_write(path: Path | str, data: bytes | str) -> None:
    """Write via a sibling temp file + rename so readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_jsonl(path: Path | str, records: Iterable[dict]) -> int:
    lines = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in records]
    atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
    return len(lines)


def read_jsonl(path: Path | str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
