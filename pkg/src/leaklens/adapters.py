"""Detector adapters: the deterministic rule-based default and an HTTP client.

An adapter turns (system prompt, user prompt) into raw detector output in
the strict verdict schema.  The rule-based adapter makes the whole
pipeline testable offline: it parses the allowed label list and the
screened text out of the prompts themselves and applies fixed pattern
tables, so its output is a pure function of its input.  The HTTP adapter
speaks a chat-completion protocol for running against an external model.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Protocol

import httpx

logger = logging.getLogger(__name__)


class AdapterError(RuntimeError):
    pass


class DetectorAdapter(Protocol):
    name: str

    def invoke(self, system_prompt: str, user_prompt: str) -> str: ...


# ============================================================
# Prompt introspection (shared by the rule-based adapter)
# ============================================================

_TYPES_RE = re.compile(r"PII_TYPES = \{(.*?)\}", re.S)
_BODY_RE = re.compile(r"^(OCR|RESPONSES):\n(.*)\n\nAnswer:", re.S | re.M)


def _allowed_labels(user_prompt: str) -> set[str]:
    match = _TYPES_RE.search(user_prompt)
    if not match:
        return set()
    return {label.strip() for label in match.group(1).split(",") if label.strip()}


def _screened_body(user_prompt: str) -> tuple[str, str]:
    """Returns (stage, text) where stage is 'ui' or 'json'."""
    match = _BODY_RE.search(user_prompt)
    if not match:
        raise AdapterError("prompt carries no OCR/RESPONSES block")
    stage = "ui" if match.group(1) == "OCR" else "json"
    return stage, match.group(2)


# ============================================================
# Pattern tables
# ============================================================

_EMAIL_RE = re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b")
_PHONE_RE = re.compile(
    r"\(\d{3}\)\s?\d{3}[-. ]\d{4}\b"
    r"|\b\d{3}[-.]\d{3}[-.]\d{4}\b"
    r"|\+\d{1,2}[-. ]?\d{3}[-. ]\d{3}[-. ]\d{4}\b"
    r"|\+\d{10,14}\b"
)
_SSN_RE = re.compile(r"\b\d{3}-\d{2}-\d{4}\b")
_CARD_RE = re.compile(r"\b(?:\d{4}[ -]){3}\d{4}\b")
_ADDRESS_RE = re.compile(
    r"\b\d{1,5}\s+(?:[A-Z][A-Za-z]*\s+){0,2}"
    r"(?:Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd|Lane|Ln|Drive|Dr|Court|Ct|Way|Place|Pl|Terrace)\b"
)
_DOB_RE = re.compile(
    r"\b(?:date of birth|dob|born(?: on)?)\b[^\n]{0,24}?"
    r"(\d{1,2}[/-]\d{1,2}[/-]\d{2,4}|\d{4}-\d{2}-\d{2})",
    re.I,
)
_LICENSE_RE = re.compile(
    r"\bdriver'?s? licen[cs]e(?: number| no\.?| #)?\s*[:#]?\s*([A-Z0-9][A-Z0-9-]{4,14})\b",
    re.I,
)
_BANK_RE = re.compile(
    r"\b(?:bank account|account|acct|iban)(?: number| no\.?| #)?\s*[:#]\s*(\d{6,18})\b",
    re.I,
)
_PASSPORT_RE = re.compile(
    r"\bpassport(?: number| no\.?| #)?\s*[:#]?\s*([A-Z][A-Z0-9]{5,9})\b", re.I)
_USERNAME_RE = re.compile(r"\b(?:username|user name|login)\s*[:#]\s*([A-Za-z0-9_.@-]{3,})", re.I)
_PASSWORD_RE = re.compile(r"\bpassword\s*[:#]\s*(\S{4,})", re.I)
_GENDER_RE = re.compile(r"\b(?:gender|sex)\s*[:=]\s*(male|female|man|woman|non-?binary|[mf])\b", re.I)
_MARITAL_RE = re.compile(
    r"\bmarital status\s*[:=]?\s*(married|single|divorced|widowed|separated)\b", re.I)
_DIAGNOSIS_RE = re.compile(r"\bdiagnos(?:is|ed(?:\s+with)?)\s*[:=]?\s*([A-Za-z][A-Za-z ]{2,40})", re.I)
_LATLNG_RE = re.compile(r"\b-?\d{1,2}\.\d{3,},\s*-?\d{1,3}\.\d{3,}\b")

# Capitalized pair treated as a person name unless either word is common prose.
# Horizontal whitespace only: words stacked on adjacent lines are almost always
# distinct UI labels, not a split name.
_NAME_PAIR_RE = re.compile(r"\b([A-Z][a-z]{1,19})[ \t]+([A-Z][a-z]{1,19})\b")
_NAME_STOPWORDS = {
    "about", "after", "all", "and", "answer", "apply", "back", "best", "click",
    "contact", "continue", "dear", "does", "email", "every", "first", "for",
    "from", "get", "give", "good", "has", "have", "hello", "here", "home",
    "how", "last", "learn", "loan", "make", "more", "name", "new", "next",
    "not", "now", "our", "page", "password", "phone", "please", "privacy",
    "regards", "sign", "site", "status", "submit", "terms", "thank", "thanks",
    "that", "username",
    "the", "this", "united", "view", "visit", "welcome", "what", "when",
    "where", "which", "will", "with", "you", "your",
}

_VALUE_PATTERNS: list[tuple[str, re.Pattern]] = [
    ("email address", _EMAIL_RE),
    ("telephone number", _PHONE_RE),
    ("social security number", _SSN_RE),
    ("credit card number", _CARD_RE),
    ("postal address", _ADDRESS_RE),
    ("date of birth", _DOB_RE),
    ("drivers license number", _LICENSE_RE),
    ("bank account number", _BANK_RE),
    ("passport number", _PASSPORT_RE),
    ("user name", _USERNAME_RE),
    ("password", _PASSWORD_RE),
    ("gender", _GENDER_RE),
    ("marital status", _MARITAL_RE),
    ("diagnosis", _DIAGNOSIS_RE),
    ("location", _LATLNG_RE),
]

# JSON object keys that mark their value as a given PII type.
_KEY_PATTERNS: list[tuple[str, re.Pattern]] = [
    ("social security number", re.compile(r"^ssn$|social.?security", re.I)),
    ("email address", re.compile(r"e-?mail", re.I)),
    ("telephone number", re.compile(r"phone|mobile|^cell|^tel$", re.I)),
    ("first name", re.compile(r"first.?name|given.?name", re.I)),
    ("last name", re.compile(r"last.?name|surname|family.?name", re.I)),
    ("date of birth", re.compile(r"date.?of.?birth|^dob$|birth.?date", re.I)),
    ("postal address", re.compile(r"address|street", re.I)),
    ("bank account number", re.compile(r"bank.?account|account.?num|^iban$|routing", re.I)),
    ("credit card number", re.compile(r"credit.?card|card.?number", re.I)),
    ("drivers license number", re.compile(r"driver.?s?.?licen[cs]e", re.I)),
    ("passport number", re.compile(r"passport", re.I)),
    ("user name", re.compile(r"user.?name|^login$", re.I)),
    ("password", re.compile(r"^passwd$|^pwd$|^password$", re.I)),
    ("gender", re.compile(r"^gender$", re.I)),
    ("marital status", re.compile(r"marital", re.I)),
    ("diagnosis", re.compile(r"^diagnosis$", re.I)),
    ("location", re.compile(r"^location$|latitude|longitude|^lat$|^lng$", re.I)),
    ("insurance policy number", re.compile(r"insurance.?policy|^policy.?num", re.I)),
    ("health records", re.compile(r"health.?record|medical.?history", re.I)),
]


def _first_group(match: re.Match) -> str:
    for group in match.groups():
        if group:
            return group
    return match.group(0)


def _scan_text(text: str) -> dict[str, str]:
    """Value-pattern scan; returns label -> first example found."""
    found: dict[str, str] = {}
    for label, pattern in _VALUE_PATTERNS:
        match = pattern.search(text)
        if match:
            found.setdefault(label, _first_group(match))
    for match in _NAME_PAIR_RE.finditer(text):
        first, last = match.group(1), match.group(2)
        if first.lower() in _NAME_STOPWORDS or last.lower() in _NAME_STOPWORDS:
            continue
        found.setdefault("first name", first)
        found.setdefault("last name", last)
        break
    return found


def scan_value_examples(text: str) -> dict[str, str]:
    """Value-pattern scan over free text: label -> first example value.

    Shared with the post-validation analyses, which need concrete PII
    values to locate in network artifacts.
    """
    return _scan_text(text)


def _walk_json(value, found: dict[str, str]) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            if isinstance(item, (dict, list)):
                _walk_json(item, found)
                continue
            if item is None or isinstance(item, bool):
                continue
            text = str(item)
            if not text:
                continue
            for label, pattern in _KEY_PATTERNS:
                if pattern.search(str(key)):
                    found.setdefault(label, text[:60])
    elif isinstance(value, list):
        for item in value:
            _walk_json(item, found)


# ============================================================
# Rule-based adapter
# ============================================================


class RuleBasedAdapter:
    """Deterministic pattern-table detector emitting the strict schema.

    Honors the prompt contract: labels are restricted to the PII_TYPES
    list interpolated into the prompt, and output is exactly
    ``Y,{...}`` / ``N,{}``.
    """

    name = "rule-based-v1"

    def invoke(self, system_prompt: str, user_prompt: str) -> str:
        allowed = _allowed_labels(user_prompt)
        stage, body = _screened_body(user_prompt)
        found = _scan_text(body)
        if stage == "json":
            # The numbered list contains canonical JSON snippets; key-based
            # detection needs the parsed structure.
            for snippet in _numbered_snippets(body):
                try:
                    parsed = json.loads(snippet)
                except ValueError:
                    continue
                _walk_json(parsed, found)
        labels = sorted(label for label in found if not allowed or label in allowed)
        if not labels:
            return "N,{}"
        if stage == "json":
            listed = ",".join(f"{label} ({found[label]})" for label in labels)
        else:
            listed = ",".join(labels)
        return "Y,{" + listed + "}"


_NUMBERED_RE = re.compile(r"^\d+\.\s?(.*)$", re.M)


def _numbered_snippets(body: str) -> list[str]:
    snippets = [m.group(1) for m in _NUMBERED_RE.finditer(body)]
    return snippets if snippets else [body]


# ============================================================
# HTTP chat adapter
# ============================================================


@dataclass
class HttpAdapterConfig:
    endpoint: str
    model: str
    timeout_s: float = 60.0


class HttpChatAdapter:
    """Chat-completion client for an externally hosted detector model."""

    def __init__(self, config: HttpAdapterConfig, client: httpx.Client | None = None):
        self.config = config
        self.name = f"http:{config.model}"
        self._client = client

    def invoke(self, system_prompt: str, user_prompt: str) -> str:
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
        }
        client = self._client or httpx
        try:
            response = client.post(self.config.endpoint, json=payload,
                                   timeout=self.config.timeout_s)
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise AdapterError(f"chat endpoint failure: {exc}") from exc


def build_adapter(spec: dict | None) -> DetectorAdapter:
    """Adapter from config: ``{"type": "rule_based"}`` (default) or
    ``{"type": "http", "endpoint": ..., "model": ..., "timeout_s": ...}``."""
    if not spec or spec.get("type", "rule_based") == "rule_based":
        return RuleBasedAdapter()
    if spec["type"] == "http":
        return HttpChatAdapter(HttpAdapterConfig(
            endpoint=spec["endpoint"],
            model=spec["model"],
            timeout_s=float(spec.get("timeout_s", 60.0)),
        ))
    raise ValueError(f"unknown adapter type: {spec.get('type')!r}")
