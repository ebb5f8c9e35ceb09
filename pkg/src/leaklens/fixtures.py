"""Deterministic demonstration corpus.

Seven synthetic services on reserved ``.test`` domains exercise every
pipeline path: UI-stage and JSON-stage validations, reviewer conflict with
default-false-positive resolution, UI image dedup clusters, duplicate
final URLs, redirect chains, all payload sources, every access and
privilege class, low- and high-entropy tokens, and exposure buckets
either side of a year boundary.  All content is fabricated; timestamps
are fixed so repeated generation is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .util import sha256_hex

CRAWLED_AT = datetime(2026, 4, 1, 12, 0, 0, tzinfo=timezone.utc)
MESSAGE_HOUR = (9, 30, 0)  # delivery time-of-day, hours before the crawl hour

GATEWAYS = ("gw-textline", "gw-shortcode")
PHONE_POOL = ("15550100001", "15550100002", "15550100003")


# ============================================================
# Low-level artifact builders
# ============================================================


def _png_bytes(seed: str, size: int = 8) -> bytes:
    """Tiny solid-color PNG; same seed, same bytes."""
    digest = hashlib.sha256(seed.encode("utf-8")).digest()
    pixel = bytes([digest[0], digest[1], digest[2], 255])
    raw = b"".join(b"\x00" + pixel * size for _ in range(size))

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    header = struct.pack(">IIBBBBB", size, size, 8, 6, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header)
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def _har(entries: list[dict]) -> dict:
    return {"log": {"version": "1.2",
                    "creator": {"name": "demo-crawler", "version": "1.0"},
                    "entries": entries}}


def _entry(url: str, mime: str, text: str, status: int = 200) -> dict:
    return {
        "startedDateTime": "2026-04-01T12:00:00.000Z",
        "time": 42,
        "request": {"method": "GET", "url": url, "headers": []},
        "response": {
            "status": status,
            "headers": [{"name": "Content-Type", "value": mime}],
            "content": {"mimeType": mime, "text": text},
        },
    }


def _ws_entry(url: str, frames: list[str]) -> dict:
    return {
        "startedDateTime": "2026-04-01T12:00:01.000Z",
        "time": 8,
        "request": {"method": "GET", "url": url, "headers": []},
        "response": {"status": 101, "headers": [], "content": {}},
        "_webSocketMessages": [
            {"type": "receive", "opcode": 1, "time": i, "data": data}
            for i, data in enumerate(frames)
        ],
    }


def _shell_html(title: str) -> str:
    return (f"<html><head><title>{title}</title></head>"
            f"<body><div id=\"app\">Loading</div></body></html>")


# ============================================================
# Fixture specs
# ============================================================


@dataclass
class BundleFixture:
    service: str
    slug: str
    url: str
    days: int
    final_url: str | None = None
    redirects: list[dict] | None = None
    ui_seed: str | None = None
    ui_text: str | None = None
    html: str | None = None
    har_entries: list[dict] | None = None
    message_body: str | None = None
    extra_messages: list[tuple[int, str]] = field(default_factory=list)

    @property
    def resolved_final_url(self) -> str:
        return self.final_url or self.url

    @property
    def bundle_id(self) -> str:
        return "b" + sha256_hex(self.resolved_final_url)[:12]


def _alpha_quote(slug: str, token: str, first: str, last: str, email: str,
                 phone: str, address: str, ssn: str, days: int) -> BundleFixture:
    url = f"https://alpha-loans.test/quote/{token}"
    state = json.dumps({"customer": {
        "first_name": first, "last_name": last, "email": email,
        "phone": phone, "address": address, "ssn": ssn,
    }})
    html = (
        "<html><head><title>ALPHA LOANS</title></head><body>"
        "<h1>Your quote is ready</h1>"
        f"<p>{first} {last}</p><p>{email}</p><p>{phone}</p><p>{address}, Springfield</p>"
        f"<form><input name=\"full_name\" value=\"{first} {last}\">"
        "<input type=\"hidden\" name=\"csrf\" value=\"t0k\"></form>"
        f"<script>window.__APP_STATE__ = {state};</script>"
        "</body></html>"
    )
    ui_text = (f"ALPHA LOANS\nYour quote is ready\n{first} {last}\n{email}\n"
               f"{phone}\n{address}, Springfield\nQuote ID: {token}")
    return BundleFixture(
        service="alpha-loans", slug=slug, url=url, days=days,
        ui_seed=f"alpha-{slug}", ui_text=ui_text, html=html,
        har_entries=[_entry(url, "text/html", html)],
        message_body=f"Your loan quote is ready: {url}",
    )


def _application_bundle(slug: str, url: str, final_url: str | None,
                        redirects: list[dict] | None, first: str, last: str,
                        email: str, days: int,
                        message_body: str) -> BundleFixture:
    landing = final_url or url
    html = (
        "<html><head><title>EPSILON JOBS</title></head><body>"
        f"<h1>Application received</h1><p>{first} {last}</p><p>{email}</p>"
        "<script type=\"application/manifest+json\">"
        "{\"name\": \"EpsilonJobs\", \"start_url\": \"/\", \"display\": \"standalone\"}"
        "</script></body></html>"
    )
    ui_text = (f"EPSILON JOBS\nApplication received\n{first} {last}\n{email}\n"
               "We will contact you soon")
    return BundleFixture(
        service="epsilon-jobs", slug=slug, url=url, days=days,
        final_url=final_url, redirects=redirects,
        ui_seed=f"eps-{slug}", ui_text=ui_text, html=html,
        har_entries=[_entry(landing, "text/html", html)],
        message_body=message_body,
    )


_AUTO = "auto"


def _filler(service: str, slug: str, url: str, days: int, title: str,
            ui_lines: str | None, *, ui_seed: str | None = _AUTO,
            html: str | None = None, har_entries: list[dict] | None = None,
            message_body: str | None = None) -> BundleFixture:
    return BundleFixture(
        service=service, slug=slug, url=url, days=days,
        ui_seed=f"{service}-{slug}" if ui_seed == _AUTO else ui_seed,
        ui_text=f"{title}\n{ui_lines}" if ui_lines is not None else None,
        html=html if html is not None else _shell_html(title),
        har_entries=har_entries,
        message_body=message_body,
    )


def build_fixtures() -> list[BundleFixture]:
    fixtures: list[BundleFixture] = []

    # ---- alpha-loans.test: two UI validations, overfetched SSN, editable form
    quote1 = _alpha_quote("quote-1", "650123-AB", "John", "Carter",
                          "john.carter@example.test", "555-301-4477",
                          "12 Birch Street", "523-44-1902", days=877)
    quote1.extra_messages.append(
        (860, f"Reminder: your quote is waiting at {quote1.url}"))
    fixtures.append(quote1)
    fixtures.append(_alpha_quote("quote-2", "650124-CD", "Emma", "Lopez",
                                 "emma.lopez@example.test", "555-301-9821",
                                 "44 Maple Avenue", "611-09-3327", days=877))
    # Recurring capture of the same final URL: ingests as a duplicate.
    # The slug sorts after every sibling so the artifact-rich original is
    # registered first.
    fixtures.append(BundleFixture(
        service="alpha-loans", slug="zz-quote-1-recrawl", url=quote1.url,
        days=877, message_body=None))
    fixtures.append(_filler("alpha-loans", "rates", "https://alpha-loans.test/rates",
                            400, "ALPHA LOANS", "Compare current rates\nAPR from 5.9%"))
    # UI image without a text sidecar: routes to the JSON stage.
    fixtures.append(_filler("alpha-loans", "calc", "https://alpha-loans.test/calculator",
                            420, "ALPHA LOANS", None, ui_seed="alpha-calc"))
    fixtures.append(_filler(
        "alpha-loans", "promo", "https://alpha-loans.test/promo/spring", 430,
        "ALPHA LOANS", None, ui_seed=None,
        html=("<html><head><title>ALPHA LOANS</title></head><body>"
              "<script>window.promoConfig = {\"campaign\": \"spring\", \"discount\": 0.1};"
              "</script></body></html>")))

    # ---- beta-health.test: UI conflict -> default FP -> JSON validation; api access
    portal_url = "https://beta-health.test/r/4F7A9C01D2E6B835"
    patient = json.dumps({"patient": {
        "first_name": "Sarah", "last_name": "Mitchell",
        "phone": "555-118-2244", "diagnosis": "Type 2 Diabetes",
    }})
    fixtures.append(BundleFixture(
        service="beta-health", slug="portal", url=portal_url, days=548,
        ui_seed="beta-portal",
        ui_text="BETA HEALTH\nPatient portal\nSarah Mitchell\nYour refill is ready",
        html=_shell_html("BETA HEALTH"),
        har_entries=[
            _entry(portal_url, "text/html", _shell_html("BETA HEALTH")),
            _entry("https://beta-health.test/api/patient", "application/json", patient),
        ],
        message_body=f"Your refill is ready. Details: {portal_url}",
    ))
    fixtures.append(_filler("beta-health", "faq", "https://beta-health.test/faq",
                            300, "BETA HEALTH", "Frequently asked questions"))
    fixtures.append(_filler(
        "beta-health", "refill-info", "https://beta-health.test/refill-info", 310,
        "BETA HEALTH", "How refills work",
        html=("<html><head><title>BETA HEALTH</title></head><body><p>How refills work</p>"
              "<script type=\"application/ld+json\">"
              "{\"@context\": \"https://schema.org\", \"@type\": \"MedicalOrganization\","
              " \"name\": \"BetaHealth\"}</script></body></html>")))
    fixtures.append(_filler("beta-health", "login", "https://beta-health.test/login",
                            290, "BETA HEALTH", "Sign in\nUsername\nPassword"))

    # ---- gamma-rsvp.test: JSON validation, websocket access, wrapped URL in SMS
    invite_url = "https://gamma-rsvp.test/i/karvq"
    guest = json.dumps({"guest": {
        "first_name": "Mara", "last_name": "Quinn", "address": "9 Elm Court",
    }})
    ws_frame = json.dumps({"event": "guest_update", "guest": "Mara Quinn",
                           "address": "9 Elm Court"})
    fixtures.append(BundleFixture(
        service="gamma-rsvp", slug="invite", url=invite_url, days=329,
        ui_seed="gamma-invite",
        ui_text="GAMMA RSVP\nYou're invited!\nTap below to respond",
        html=_shell_html("GAMMA RSVP"),
        har_entries=[
            _entry(invite_url, "text/html", _shell_html("GAMMA RSVP")),
            _entry("https://gamma-rsvp.test/api/guest", "application/json", guest),
            _ws_entry("wss://gamma-rsvp.test/live", [ws_frame]),
        ],
        message_body="You're invited!\nhttps://gamma-rsvp.test/i/\nkarvq\nSee you there",
        extra_messages=[(320, f"Reminder to RSVP: {invite_url}")],
    ))
    fixtures.append(_filler("gamma-rsvp", "home", "https://gamma-rsvp.test/", 340,
                            "GAMMA RSVP", "Plan gatherings with ease"))
    fixtures.append(_filler("gamma-rsvp", "about", "https://gamma-rsvp.test/about", 335,
                            "GAMMA RSVP", "Built for organizers"))
    fixtures.append(_filler("gamma-rsvp", "pricing", "https://gamma-rsvp.test/pricing",
                            330, "GAMMA RSVP", "Free for small events"))
    declined = json.dumps({"guest": {"status": "declined"}})
    fixtures.append(_filler(
        "gamma-rsvp", "invite-x", "https://gamma-rsvp.test/i/zzcommon", 325,
        "GAMMA RSVP", "This invitation was declined",
        har_entries=[
            _entry("https://gamma-rsvp.test/api/guest2", "application/json", declined),
        ]))

    # ---- delta-shop.test: sample-content FP, four-way UI dedup cluster
    demo_ui = "DELTA SHOP\nSample order for Jane Doe\nTotal: $49.99\nThis is demo data"
    for i in range(1, 5):
        order_url = f"https://delta-shop.test/order/5820{i}"
        entries = [_entry(order_url, "text/html", _shell_html("DELTA SHOP"))]
        if i == 1:
            order = json.dumps({"order": {"number": 58201, "total": 49.99, "items": 3}})
            entries.append(_entry("https://delta-shop.test/api/order",
                                  "application/json", order))
            entries.append(_entry(
                "https://delta-shop.test/api/order.js", "application/javascript",
                "handleOrder({\"order\": {\"status\": \"shipped\"}});"))
        fixtures.append(BundleFixture(
            service="delta-shop", slug=f"order-{i}", url=order_url, days=150 + i,
            ui_seed="delta-order-shared", ui_text=demo_ui,
            html=_shell_html("DELTA SHOP"), har_entries=entries,
            message_body=f"Track your order: {order_url}",
        ))
    next_data = json.dumps({"props": {"pageProps": {"deals": [
        {"sku": "D-100", "price": 9.99}]}}, "page": "/deals"})
    fixtures.append(_filler(
        "delta-shop", "deals", "https://delta-shop.test/deals", 140,
        "DELTA SHOP", "Today's deals",
        html=("<html><head><title>DELTA SHOP</title></head><body>"
              f"<script id=\"__NEXT_DATA__\" type=\"application/json\">{next_data}"
              "</script></body></html>")))
    fixtures.append(_filler("delta-shop", "track", "https://delta-shop.test/track",
                            130, "DELTA SHOP", None, ui_seed="delta-track"))
    fixtures.append(_filler("delta-shop", "cart", "https://delta-shop.test/cart",
                            120, "DELTA SHOP", "Your cart is empty"))
    fixtures.append(_filler("delta-shop", "returns", "https://delta-shop.test/returns",
                            110, "DELTA SHOP", "Easy returns within 30 days"))

    # ---- epsilon-jobs.test: url_embedded access, redirect chain, year boundary
    eps1_final = ("https://epsilon-jobs.test/apply?session=A7C2Q9"
                  "&email=jordan.reeves@example.test")
    fixtures.append(_application_bundle(
        "app-1", "http://epsilon-jobs.test/a?e=jr", eps1_final,
        redirects=[
            {"url": "http://epsilon-jobs.test/a?e=jr", "status": 302,
             "headers": {"location": eps1_final}},
            {"url": eps1_final, "status": 200, "headers": {}},
        ],
        first="Jordan", last="Reeves", email="jordan.reeves@example.test",
        days=365, message_body="Application update: http://epsilon-jobs.test/a?e=jr"))
    eps2_url = ("https://epsilon-jobs.test/apply?session=B8D3R4"
                "&email=casey.morgan@example.test")
    fixtures.append(_application_bundle(
        "app-2", eps2_url, None, redirects=None,
        first="Casey", last="Morgan", email="casey.morgan@example.test",
        days=366, message_body=f"Application update: {eps2_url}"))
    fixtures.append(_filler("epsilon-jobs", "home", "https://epsilon-jobs.test/", 80,
                            "EPSILON JOBS", "Find your next role"))
    fixtures.append(_filler("epsilon-jobs", "browse", "https://epsilon-jobs.test/browse",
                            75, "EPSILON JOBS", "Browse openings by region"))
    fixtures.append(_filler("epsilon-jobs", "faq", "https://epsilon-jobs.test/faq",
                            70, "EPSILON JOBS", "Hiring process questions"))
    fixtures.append(_filler(
        "epsilon-jobs", "alerts", "https://epsilon-jobs.test/alerts", 65,
        "EPSILON JOBS", "Job alert preferences",
        html=("<html><head><title>EPSILON JOBS</title></head><body>"
              "<script type=\"application/json\" id=\"region-data\">"
              "{\"alerts\": [{\"id\": 1, \"region\": \"north\"}]}</script>"
              "</body></html>")))

    # ---- zeta-bank.test: no UI artifacts at all, api access, mixed-case token
    stmt_url = "https://zeta-bank.test/stmt?t=aB3xK9Qm"
    account = json.dumps({"profile": {
        "first_name": "Priya", "phone_number": "555-774-0912",
        "bank_account_number": "00982771"}, "balance": 102.5})
    fixtures.append(BundleFixture(
        service="zeta-bank", slug="stmt", url=stmt_url, days=1169,
        har_entries=[
            _entry("https://zeta-bank.test/api/statement", "application/json", account),
        ],
        message_body=f"Review your statement at {stmt_url}.",
    ))
    fixtures.append(_filler("zeta-bank", "help", "https://zeta-bank.test/help", 1000,
                            "ZETA BANK", "Support center"))
    fixtures.append(_filler("zeta-bank", "locations", "https://zeta-bank.test/locations",
                            950, "ZETA BANK", "Branch locations"))
    fixtures.append(_filler("zeta-bank", "alerts", "https://zeta-bank.test/alerts", 900,
                            "ZETA BANK", "Account alert settings"))

    # ---- eta-news.test: company-info FP, three-way dedup, one empty bundle, fillers
    org = json.dumps({"@context": "https://schema.org",
                      "@type": "NewsMediaOrganization", "name": "EtaNews",
                      "url": "https://eta-news.test"})
    fixtures.append(_filler(
        "eta-news", "contact", "https://eta-news.test/contact", 60,
        "ETA NEWS", "Newsroom hotline: 555-200-3000\nIndependent local reporting since 1998",
        html=("<html><head><title>ETA NEWS</title></head><body><p>Newsroom</p>"
              f"<script type=\"application/ld+json\">{org}</script></body></html>")))
    for i in range(1, 4):
        fixtures.append(_filler(
            "eta-news", f"sub-{i}", f"https://eta-news.test/subscribe?src={i}",
            55 - i, "ETA NEWS", "Subscribe for daily updates",
            ui_seed="eta-subscribe-shared"))
    # A manifest referencing no artifacts at all.
    fixtures.append(BundleFixture(
        service="eta-news", slug="teaser", url="https://eta-news.test/teaser",
        days=50, html=None, message_body="Breaking: https://eta-news.test/teaser"))
    for i in range(1, 13):
        article = json.dumps({"@type": "NewsArticle", "headline": f"Story {i}"})
        fixtures.append(_filler(
            "eta-news", f"article-{i:02d}", f"https://eta-news.test/article/s{i:02d}",
            10 + i, "ETA NEWS", f"Headline story {i}\nRead more below",
            html=("<html><head><title>ETA NEWS</title></head><body>"
                  f"<p>Headline story {i}</p>"
                  f"<script type=\"application/ld+json\">{article}</script>"
                  "</body></html>")))
    return fixtures


# ============================================================
# Reviewer script
# ============================================================


def build_reviewer_script(fixtures: list[BundleFixture]) -> dict:
    by_slug = {f"{f.service}/{f.slug}": f for f in fixtures}

    def bid(key: str) -> str:
        return by_slug[key].bundle_id

    def tp(item_id: str, reviewer: str) -> dict:
        return {"item_id": item_id, "reviewer_id": reviewer,
                "decision": "true_positive", "corrected_types": []}

    def fp(item_id: str, reviewer: str, reason: str) -> dict:
        return {"item_id": item_id, "reviewer_id": reviewer,
                "decision": "false_positive", "fp_reason": reason}

    labels: list[dict] = []
    for key in ("alpha-loans/quote-1", "alpha-loans/quote-2",
                "epsilon-jobs/app-1", "epsilon-jobs/app-2"):
        item = f"{bid(key)}:ui"
        labels += [tp(item, "r1"), tp(item, "r2")]
    conflict_item = f"{bid('beta-health/portal')}:ui"
    labels += [tp(conflict_item, "r1"), fp(conflict_item, "r2", "misclassification")]
    sample_item = f"{bid('delta-shop/order-1')}:ui"
    labels += [fp(sample_item, "r1", "sample_demo_content"),
               fp(sample_item, "r2", "sample_demo_content")]
    company_item = f"{bid('eta-news/contact')}:ui"
    labels += [fp(company_item, "r1", "public_or_company_info"),
               fp(company_item, "r2", "public_or_company_info")]
    for key in ("beta-health/portal", "gamma-rsvp/invite", "zeta-bank/stmt"):
        item = f"{bid(key)}:json"
        labels += [tp(item, "r1"), tp(item, "r2")]

    return {
        "labels": labels,
        "resolutions": [{"item_id": conflict_item, "consensus": False}],
    }


# ============================================================
# Generation
# ============================================================


def _format_ts(moment: datetime) -> str:
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _delivery_time(days: int) -> datetime:
    h, m, s = MESSAGE_HOUR
    base = CRAWLED_AT - timedelta(days=days)
    return base.replace(hour=h, minute=m, second=s)


def generate_demo(out_dir: Path | str, include_labels: bool = True) -> dict:
    """Write the demo corpus, capture tree, reviewer script, and config.

    Returns a summary with the config path to run the pipeline against.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixtures = build_fixtures()

    # ---- corpus ----
    messages: list[dict] = []

    def add_message(days: int, body: str, index: int) -> None:
        messages.append({
            "gateway": GATEWAYS[index % len(GATEWAYS)],
            "phone_number": PHONE_POOL[index % len(PHONE_POOL)],
            "received_at": _format_ts(_delivery_time(days)),
            "body": body,
        })

    for index, fixture in enumerate(fixtures):
        body = fixture.message_body
        if body is None and fixture.slug.endswith("recrawl"):
            continue  # same URL as its original; no extra delivery
        if body is None:
            body = f"Visit {fixture.url}"
        add_message(fixture.days, body, index)
        for extra_days, extra_body in fixture.extra_messages:
            add_message(extra_days, extra_body, index + 1)
    # A message with no link, and one malformed line exercising the skip path.
    add_message(30, "Your verification code is 443210", 1)
    corpus_lines = [json.dumps(m, ensure_ascii=False) for m in messages]
    corpus_lines.insert(
        len(corpus_lines) // 2,
        json.dumps({"gateway": "gw-broken",
                    "received_at": "2026-01-01T00:00:00Z", "body": "no sender"}))
    (out / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")

    # ---- capture tree ----
    capture_root = out / "capture"
    for fixture in fixtures:
        bundle_dir = capture_root / fixture.service / fixture.slug
        bundle_dir.mkdir(parents=True, exist_ok=True)
        manifest: dict = {
            "url": fixture.url,
            "final_url": fixture.resolved_final_url,
            "crawled_at": _format_ts(CRAWLED_AT),
        }
        if fixture.redirects:
            manifest["redirects"] = fixture.redirects
        if fixture.ui_seed:
            (bundle_dir / "ui.png").write_bytes(_png_bytes(fixture.ui_seed))
            manifest["ui_image"] = "ui.png"
        if fixture.ui_text is not None:
            (bundle_dir / "ui.txt").write_text(fixture.ui_text, encoding="utf-8")
            manifest["ui_text"] = "ui.txt"
        if fixture.html is not None:
            (bundle_dir / "page.html").write_text(fixture.html, encoding="utf-8")
            manifest["html"] = "page.html"
        if fixture.har_entries is not None:
            (bundle_dir / "log.har").write_text(
                json.dumps(_har(fixture.har_entries), ensure_ascii=False, indent=1),
                encoding="utf-8")
            manifest["har"] = "log.har"
        (bundle_dir / f"{fixture.slug}.manifest.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=1), encoding="utf-8")

    # ---- reviewer script + config ----
    config: dict = {
        "workspace": "workspace",
        "corpus": "corpus.jsonl",
        "bundle_dirs": ["capture"],
        "adapter": {"type": "rule_based"},
        "manual_findings": {
            "alpha-loans.test": ["Account Takeover"],
            "beta-health.test": ["Authentication"],
            "epsilon-jobs.test": ["UI Navigation"],
        },
        "mock": {"space_size": 1000, "occupied": {"count": 100, "seed": 7},
                 "rate_limit_ms": 0},
        "seeds": {"enumeration": 1337, "mutation": 99},
    }
    if include_labels:
        script = build_reviewer_script(fixtures)
        (out / "scripted_labels.json").write_text(
            json.dumps(script, ensure_ascii=False, indent=1), encoding="utf-8")
        config["scripted_labels"] = "scripted_labels.json"
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, ensure_ascii=False, indent=1),
                           encoding="utf-8")

    return {
        "config_path": str(config_path),
        "bundles": len(fixtures),
        "messages": len(messages),
        "services": len({f.service for f in fixtures}),
    }
