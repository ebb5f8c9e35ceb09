"""Crawl artifact bundles: ingestion, identity, UI dedup, redirect fetcher.

A bundle is the unit the crawl produced per URL: full-page UI image,
network log (HAR), HTML snapshot, optional pre-resolved UI text, plus the
redirect chain.  Identity is the SHA-256 of the final URL, so recurring
collection of the same landing page collapses.  UI deduplication is
byte-identity (MD5 content digest), deliberately blind to near-duplicates.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from threading import Lock

import httpx

from .corpus import url_id_for
from .util import (
    format_timestamp,
    md5_hex,
    parse_strict_json,
    parse_timestamp,
    registrable_domain,
    sha256_hex,
    write_jsonl,
)

logger = logging.getLogger(__name__)


class CaptureError(RuntimeError):
    pass


# ============================================================
# Types
# ============================================================


@dataclass
class RedirectHop:
    url: str
    status: int
    headers: dict[str, str]


@dataclass
class ArtifactBundle:
    bundle_id: str
    url_id: str
    url: str
    final_url: str
    final_url_hash: str
    crawled_at: datetime
    redirect_chain: list[RedirectHop] = field(default_factory=list)
    ui_image_path: str | None = None
    html_path: str | None = None
    har_path: str | None = None
    ui_text_path: str | None = None
    ui_duplicate_of: str | None = None

    @property
    def domain(self) -> str:
        return registrable_domain(self.final_url)

    @property
    def has_network_artifacts(self) -> bool:
        return bool(self.har_path or self.html_path)

    @property
    def has_any_artifact(self) -> bool:
        return bool(self.ui_image_path or self.ui_text_path or self.has_network_artifacts)

    def to_row(self) -> dict:
        return {
            "bundle_id": self.bundle_id,
            "url_id": self.url_id,
            "url": self.url,
            "final_url": self.final_url,
            "final_url_hash": self.final_url_hash,
            "crawled_at": format_timestamp(self.crawled_at),
            "redirect_chain": [
                {"url": h.url, "status": h.status, "headers": h.headers}
                for h in self.redirect_chain
            ],
            "ui_image_path": self.ui_image_path,
            "html_path": self.html_path,
            "har_path": self.har_path,
            "ui_text_path": self.ui_text_path,
            "ui_duplicate_of": self.ui_duplicate_of,
        }

    @classmethod
    def from_row(cls, row: dict) -> "ArtifactBundle":
        return cls(
            bundle_id=row["bundle_id"],
            url_id=row["url_id"],
            url=row["url"],
            final_url=row["final_url"],
            final_url_hash=row["final_url_hash"],
            crawled_at=parse_timestamp(row["crawled_at"]),
            redirect_chain=[RedirectHop(**h) for h in row.get("redirect_chain", [])],
            ui_image_path=row.get("ui_image_path"),
            html_path=row.get("html_path"),
            har_path=row.get("har_path"),
            ui_text_path=row.get("ui_text_path"),
            ui_duplicate_of=row.get("ui_duplicate_of"),
        )


@dataclass
class IngestOutcome:
    bundle_id: str
    duplicate: bool


@dataclass
class DedupResult:
    retained: list[ArtifactBundle]
    duplicates: dict[str, str]  # duplicate bundle_id -> survivor bundle_id
    warnings: list[str] = field(default_factory=list)


# ============================================================
# Bundle store
# ============================================================

_MANIFEST_FILE_KEYS = ("ui_image", "html", "har", "ui_text")


class BundleStore:
    """Ordered bundle index persisted as JSONL, keyed by final-URL hash."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.index_path = self.root / "bundles.jsonl"
        self._bundles: list[ArtifactBundle] = []
        self._by_hash: dict[str, ArtifactBundle] = {}
        self._load()

    def _load(self) -> None:
        if not self.index_path.is_file():
            return
        from .util import read_jsonl

        for row in read_jsonl(self.index_path):
            bundle = ArtifactBundle.from_row(row)
            self._bundles.append(bundle)
            self._by_hash[bundle.final_url_hash] = bundle

    def _save(self) -> None:
        write_jsonl(self.index_path, [b.to_row() for b in self._bundles])

    # ---- ingestion ----

    def ingest_bundle(self, manifest_path: Path | str,
                      first_seen: dict[str, datetime] | None = None) -> IngestOutcome:
        """Register one bundle from its manifest.

        A manifest whose final URL hashes to an existing bundle returns the
        existing id flagged as duplicate.  Referenced files must exist.
        ``first_seen`` (url_id -> timestamp) enables the crawl-after-delivery
        sanity check when corpus linkage is available.
        """
        manifest_path = Path(manifest_path)
        try:
            manifest = parse_strict_json(manifest_path.read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise CaptureError(f"{manifest_path}: unreadable manifest ({exc})") from exc
        for key in ("url", "final_url", "crawled_at"):
            if not isinstance(manifest.get(key), str):
                raise CaptureError(f"{manifest_path}: missing field {key!r}")

        final_url = manifest["final_url"]
        final_url_hash = sha256_hex(final_url)
        existing = self._by_hash.get(final_url_hash)
        if existing is not None:
            logger.info("duplicate final URL %s -> existing bundle %s",
                        final_url, existing.bundle_id)
            return IngestOutcome(existing.bundle_id, duplicate=True)

        paths: dict[str, str | None] = {}
        for key in _MANIFEST_FILE_KEYS:
            rel = manifest.get(key)
            if rel is None:
                paths[key] = None
                continue
            resolved = (manifest_path.parent / rel).resolve()
            if not resolved.is_file():
                raise CaptureError(f"{manifest_path}: referenced {key} file missing: {rel}")
            paths[key] = str(resolved)

        crawled_at = parse_timestamp(manifest["crawled_at"])
        url_id = url_id_for(manifest["url"])
        if first_seen and url_id in first_seen and crawled_at < first_seen[url_id]:
            raise CaptureError(
                f"{manifest_path}: crawled_at precedes first message delivery"
            )

        chain = [
            RedirectHop(h["url"], int(h["status"]), dict(h.get("headers", {})))
            for h in manifest.get("redirects", [])
        ]
        if chain and chain[-1].url != final_url:
            raise CaptureError(f"{manifest_path}: redirect chain does not end at final_url")

        bundle = ArtifactBundle(
            bundle_id="b" + final_url_hash[:12],
            url_id=url_id,
            url=manifest["url"],
            final_url=final_url,
            final_url_hash=final_url_hash,
            crawled_at=crawled_at,
            redirect_chain=chain,
            ui_image_path=paths["ui_image"],
            html_path=paths["html"],
            har_path=paths["har"],
            ui_text_path=paths["ui_text"],
        )
        self._bundles.append(bundle)
        self._by_hash[final_url_hash] = bundle
        self._save()
        return IngestOutcome(bundle.bundle_id, duplicate=False)

    def ingest_dir(self, directory: Path | str,
                   first_seen: dict[str, datetime] | None = None
                   ) -> tuple[list[IngestOutcome], list[str]]:
        """Ingest every ``*.manifest.json`` under a directory, sorted by name."""
        directory = Path(directory)
        outcomes: list[IngestOutcome] = []
        errors: list[str] = []
        for manifest in sorted(directory.rglob("*.manifest.json")):
            try:
                outcomes.append(self.ingest_bundle(manifest, first_seen))
            except CaptureError as exc:
                errors.append(str(exc))
                logger.warning("skipping bundle: %s", exc)
        return outcomes, errors

    # ---- queries ----

    def bundles(self) -> list[ArtifactBundle]:
        return list(self._bundles)

    def get(self, bundle_id: str) -> ArtifactBundle | None:
        for bundle in self._bundles:
            if bundle.bundle_id == bundle_id:
                return bundle
        return None

    def retained(self) -> list[ArtifactBundle]:
        """Bundles surviving UI dedup (everything, before dedup runs)."""
        return [b for b in self._bundles if b.ui_duplicate_of is None]

    # ---- dedup ----

    def dedup_ui(self) -> DedupResult:
        result = dedup_ui(self._bundles)
        self._save()
        return result


def dedup_ui(bundles: list[ArtifactBundle]) -> DedupResult:
    """Collapse byte-identical UI images to their first occurrence.

    Bundles without a UI image pass through untouched; an unreadable image
    demotes the bundle to no-UI with a warning.  Mutates ``ui_duplicate_of``
    on duplicates.  Idempotent.
    """
    index: dict[str, str] = {}
    retained: list[ArtifactBundle] = []
    duplicates: dict[str, str] = {}
    warnings: list[str] = []
    for bundle in bundles:
        if bundle.ui_duplicate_of is not None:
            # Already marked by an earlier pass; keep the existing verdict.
            duplicates[bundle.bundle_id] = bundle.ui_duplicate_of
            continue
        if bundle.ui_image_path is None:
            retained.append(bundle)
            continue
        try:
            digest = md5_hex(Path(bundle.ui_image_path).read_bytes())
        except OSError as exc:
            msg = f"{bundle.bundle_id}: unreadable UI image ({exc}); treating as no-UI"
            warnings.append(msg)
            logger.warning(msg)
            bundle.ui_image_path = None
            retained.append(bundle)
            continue
        survivor = index.get(digest)
        if survivor is None:
            index[digest] = bundle.bundle_id
            retained.append(bundle)
        else:
            bundle.ui_duplicate_of = survivor
            duplicates[bundle.bundle_id] = survivor
    return DedupResult(retained=retained, duplicates=duplicates, warnings=warnings)


# ============================================================
# Redirect-chain fetcher
# ============================================================


class HostPacer:
    """Enforces a minimum interval between requests to the same host."""

    def __init__(self, interval_s: float = 2.0,
                 clock=time.monotonic, sleep=time.sleep):
        self.interval_s = interval_s
        self._clock = clock
        self._sleep = sleep
        self._last: dict[str, float] = {}
        self._lock = Lock()

    def wait(self, host: str) -> float:
        """Block until the host may be contacted again; returns slept seconds."""
        with self._lock:
            now = self._clock()
            last = self._last.get(host)
            delay = 0.0 if last is None else max(0.0, self.interval_s - (now - last))
            self._last[host] = now + delay
        if delay > 0:
            self._sleep(delay)
        return delay


@dataclass
class FetchResult:
    chain: list[RedirectHop]
    final_url: str


def fetch_redirect_chain(url: str, max_hops: int = 10, *,
                         client: httpx.Client | None = None,
                         pacer: HostPacer | None = None,
                         timeout: float = 15.0) -> FetchResult:
    """Follow 3xx Location hops manually, recording each hop.

    GET only, no cookies, no credentials.  Raises on network failure (with
    partial chain attached) and when ``max_hops`` is exceeded.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    own_client = client is None
    if own_client:
        client = httpx.Client(follow_redirects=False, timeout=timeout, trust_env=False)
    pacer = pacer or HostPacer()
    chain: list[RedirectHop] = []
    current = url
    try:
        for _ in range(max_hops):
            host = httpx.URL(current).host or ""
            pacer.wait(host)
            client.cookies.clear()
            try:
                response = client.get(current)
            except httpx.HTTPError as exc:
                error = CaptureError(f"fetch failed at {current}: {exc}")
                error.partial_chain = chain  # type: ignore[attr-defined]
                raise error from exc
            chain.append(RedirectHop(current, response.status_code,
                                     dict(response.headers)))
            if response.status_code in (301, 302, 303, 307, 308):
                location = response.headers.get("location")
                if location:
                    current = str(httpx.URL(current).join(location))
                    continue
            return FetchResult(chain=chain, final_url=current)
        error = CaptureError(f"redirect loop: exceeded {max_hops} hops from {url}")
        error.partial_chain = chain  # type: ignore[attr-defined]
        raise error
    finally:
        if own_client:
            client.close()
