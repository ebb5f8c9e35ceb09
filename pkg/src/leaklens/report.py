"""Aggregated reporting over all analyses: per-service table plus totals.

Rows are keyed by registrable domain and sorted ascending so reruns are
byte-identical; the only clock read is an explicit generated_at field in
the JSON/text outputs, excluded from determinism checks.  Each root-cause
category carries its standard-mapping strings as static metadata.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import AccessClassification, ExposureRecord, OverfetchFinding, UserProfile
from .tokens import TokenAnalysis
from .triage import ValidatedRecord
from .util import atomic_write, format_timestamp, utcnow

logger = logging.getLogger(__name__)


class IntegrityError(RuntimeError):
    """Totals disagree with the underlying stores."""


# Root-cause categories with their standards mapping (static metadata).
CATEGORY_METADATA = (
    ("Initial Access", "A01:2025; API2:2023", "CWE-284; CWE-287; CWE-862"),
    ("Privileged Exposure", "A01:2025", "CWE-200; CWE-359"),
    ("Account Takeover", "A01:2025; A02:2025; A06:2025", "CWE-862; CWE-613"),
    ("Overfetching", "API1:2023", "CWE-201"),
    ("UI Navigation", "A06:2025", "CWE-425; CWE-862"),
    ("Authentication", "A06:2025; A07:2025", "CWE-287; CWE-307"),
    ("User Enumeration", "A01:2025; A04:2025; API1:2023", "CWE-331; CWE-307; CWE-425"),
)

# Manual-review categories recorded by analysts, not computed here.
MANUAL_CATEGORIES = ("Account Takeover", "UI Navigation", "Authentication")

SERVICE_COLUMNS = (
    "domain", "validated_urls", "ui_validated", "json_validated",
    "access_class", "privilege_class", "token_flagged", "overfetch",
    "exposure_min_days", "exposure_max_days",
)


@dataclass
class ServiceSummary:
    domain: str
    validated_urls: int = 0
    ui_validated: int = 0
    json_validated: int = 0
    access_class: str = ""
    privilege_class: str = ""
    token_flagged: bool | None = None
    overfetch: bool = False
    exposure_min_days: int | None = None
    exposure_max_days: int | None = None

    def to_row(self) -> list:
        return [
            self.domain, self.validated_urls, self.ui_validated, self.json_validated,
            self.access_class, self.privilege_class,
            "" if self.token_flagged is None else str(self.token_flagged).lower(),
            str(self.overfetch).lower(),
            "" if self.exposure_min_days is None else self.exposure_min_days,
            "" if self.exposure_max_days is None else self.exposure_max_days,
        ]


@dataclass
class ReportInputs:
    validated: list[ValidatedRecord]
    access: list[tuple[str, AccessClassification]] = field(default_factory=list)
    privilege: list[tuple[str, str, str]] = field(default_factory=list)  # bundle, url, class
    overfetch: list[tuple[str, OverfetchFinding]] = field(default_factory=list)
    tokens: list[tuple[str, TokenAnalysis]] = field(default_factory=list)  # domain, analysis
    exposure: list[ExposureRecord] = field(default_factory=list)
    exposure_histogram: dict[str, int] = field(default_factory=dict)
    profiles: list[UserProfile] = field(default_factory=list)
    manual_findings: dict[str, list[str]] = field(default_factory=dict)  # domain -> categories


@dataclass
class Report:
    services: list[ServiceSummary]
    totals: dict
    categories: list[dict]
    profiles_count: int
    exposure_histogram: dict[str, int]


def summarize(inputs: ReportInputs) -> Report:
    """Deterministic aggregation with cross-checked totals."""
    domains: dict[str, ServiceSummary] = {}
    bundle_domain: dict[str, str] = {}
    for record in inputs.validated:
        summary = domains.setdefault(record.domain, ServiceSummary(record.domain))
        summary.validated_urls += 1
        if record.stage == "ui":
            summary.ui_validated += 1
        else:
            summary.json_validated += 1
        bundle_domain[record.bundle_id] = record.domain

    access_by_bundle = dict(inputs.access)
    privilege_by_bundle = {b: cls for b, _, cls in inputs.privilege}
    for domain, summary in domains.items():
        bundle_ids = sorted(b for b, d in bundle_domain.items() if d == domain)
        for bundle_id in bundle_ids:
            classification = access_by_bundle.get(bundle_id)
            if classification is not None and not summary.access_class:
                summary.access_class = classification.cls
            privilege = privilege_by_bundle.get(bundle_id)
            if privilege and not summary.privilege_class:
                summary.privilege_class = privilege

    for domain, analysis in inputs.tokens:
        if domain in domains:
            domains[domain].token_flagged = analysis.flagged_low_entropy

    for bundle_id, finding in inputs.overfetch:
        domain = bundle_domain.get(bundle_id)
        if domain and finding.overfetched:
            domains[domain].overfetch = True

    exposure_by_bundle: dict[str, ExposureRecord] = {r.bundle_id: r for r in inputs.exposure}
    for bundle_id, record in exposure_by_bundle.items():
        domain = bundle_domain.get(bundle_id)
        if not domain:
            continue
        summary = domains[domain]
        days = record.exposure_days
        if summary.exposure_min_days is None or days < summary.exposure_min_days:
            summary.exposure_min_days = days
        if summary.exposure_max_days is None or days > summary.exposure_max_days:
            summary.exposure_max_days = days

    services = sorted(domains.values(), key=lambda s: s.domain)

    ui_total = sum(s.ui_validated for s in services)
    json_total = sum(s.json_validated for s in services)
    validated_total = sum(s.validated_urls for s in services)
    if validated_total != len(inputs.validated) or ui_total + json_total != validated_total:
        raise IntegrityError(
            f"stage counts ({ui_total}+{json_total}) disagree with validated total "
            f"({len(inputs.validated)})")

    access_breakdown: dict[str, int] = {}
    for _, classification in inputs.access:
        access_breakdown[classification.cls] = access_breakdown.get(classification.cls, 0) + 1
    privilege_breakdown: dict[str, int] = {}
    for _, _, cls in inputs.privilege:
        privilege_breakdown[cls] = privilege_breakdown.get(cls, 0) + 1

    overfetch_domains = {s.domain for s in services if s.overfetch}
    enumerable_domains = {s.domain for s in services if s.token_flagged}
    manual_counts = {category: 0 for category in MANUAL_CATEGORIES}
    for domain, categories in inputs.manual_findings.items():
        for category in categories:
            if category in manual_counts:
                manual_counts[category] += 1

    category_counts = {
        "Initial Access": len(inputs.access),
        "Privileged Exposure": len(inputs.privilege),
        "Account Takeover": manual_counts["Account Takeover"],
        "Overfetching": len(overfetch_domains),
        "UI Navigation": manual_counts["UI Navigation"],
        "Authentication": manual_counts["Authentication"],
        "User Enumeration": len(enumerable_domains),
    }
    categories = [
        {"category": name, "count": category_counts[name], "owasp": owasp, "cwe": cwe}
        for name, owasp, cwe in CATEGORY_METADATA
    ]

    totals = {
        "validated_urls": validated_total,
        "ui_validated": ui_total,
        "json_validated": json_total,
        "services": len(services),
        "access_breakdown": dict(sorted(access_breakdown.items())),
        "privilege_breakdown": dict(sorted(privilege_breakdown.items())),
        "overfetch_services": len(overfetch_domains),
        "potentially_enumerable_services": len(enumerable_domains),
        "profiles": len(inputs.profiles),
    }
    return Report(
        services=services,
        totals=totals,
        categories=categories,
        profiles_count=len(inputs.profiles),
        exposure_histogram=dict(sorted(inputs.exposure_histogram.items())),
    )


# ============================================================
# Emission
# ============================================================


def emit(report: Report, out_dir: Path | str,
         formats: tuple[str, ...] = ("csv", "json", "txt")) -> list[Path]:
    """Write report.csv / report.json / report.txt into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "csv" in formats:
        path = out_dir / "report.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(SERVICE_COLUMNS)
            for service in report.services:
                writer.writerow(service.to_row())
        written.append(path)

    if "json" in formats:
        path = out_dir / "report.json"
        document = {
            "generated_at": format_timestamp(utcnow()),
            "totals": report.totals,
            "services": [dict(zip(SERVICE_COLUMNS, s.to_row())) for s in report.services],
            "categories": report.categories,
            "exposure_histogram": report.exposure_histogram,
        }
        atomic_write(path, json.dumps(document, ensure_ascii=False, indent=2,
                                      sort_keys=True) + "\n")
        written.append(path)

    if "txt" in formats:
        path = out_dir / "report.txt"
        lines = [
            "PII exposure audit report",
            f"generated_at: {format_timestamp(utcnow())}",
            "",
            f"services: {report.totals['services']}",
            f"validated URLs: {report.totals['validated_urls']} "
            f"(ui {report.totals['ui_validated']}, json {report.totals['json_validated']})",
            f"unique user profiles: {report.profiles_count}",
            "",
            "exposure histogram:",
        ]
        for bucket, count in report.exposure_histogram.items():
            lines.append(f"  {bucket}: {count}")
        lines.append("")
        lines.append("root-cause categories:")
        for category in report.categories:
            lines.append(
                f"  {category['category']}: {category['count']} "
                f"(OWASP: {category['owasp']} | CWE: {category['cwe']})")
        atomic_write(path, "\n".join(lines) + "\n")
        written.append(path)

    logger.info("report written: %s", ", ".join(p.name for p in written))
    return written
