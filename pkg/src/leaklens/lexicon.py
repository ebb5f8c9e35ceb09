"""The 66-type PII taxonomy used throughout screening and analysis.

The shipped list lives in ``data/pii_types.txt``: one lowercase canonical
label per line, with ``#``-prefixed category headers.  Categories are for
display only and carry no behavior.  Three labels are marked as contact
PII because profile analysis treats them specially.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

CONTACT_LABELS = frozenset({"telephone number", "email address", "postal address"})
NAME_LABELS = frozenset({"first name", "last name"})

EXPECTED_TYPE_COUNT = 66


class LexiconError(ValueError):
    """Raised when a lexicon file is malformed."""


# ============================================================
# Types
# ============================================================


@dataclass(frozen=True)
class PiiType:
    canonical_label: str
    category: str
    is_contact: bool


class Lexicon:
    """Immutable label set with O(1) case-insensitive canonical lookup."""

    def __init__(self, types: list[PiiType]):
        self.types = tuple(types)
        self._by_label = {t.canonical_label: t for t in self.types}
        self._by_folded = {t.canonical_label.casefold(): t for t in self.types}

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, label: str) -> bool:
        return label in self._by_label

    @property
    def labels(self) -> list[str]:
        return [t.canonical_label for t in self.types]

    def lookup(self, label: str) -> PiiType | None:
        """Case-insensitive lookup returning the canonical entry, if any."""
        return self._by_folded.get(label.strip().casefold())

    def canonical(self, label: str) -> str | None:
        entry = self.lookup(label)
        return entry.canonical_label if entry else None

    def contact_labels(self) -> frozenset[str]:
        return frozenset(t.canonical_label for t in self.types if t.is_contact)


# ============================================================
# Loading
# ============================================================


def load_lexicon(path: Path | str | None = None, strict: bool = True) -> Lexicon:
    """Load a lexicon file; the packaged taxonomy when no path is given.

    Duplicate labels are always fatal.  With ``strict`` (the default) a
    count other than 66 is fatal too, so a truncated or padded file cannot
    slip into a run unnoticed.
    """
    if path is None:
        text = resources.files("leaklens.data").joinpath("pii_types.txt").read_text("utf-8")
        origin = "<packaged>"
    else:
        text = Path(path).read_text("utf-8")
        origin = str(path)

    types: list[PiiType] = []
    seen: set[str] = set()
    category = "uncategorized"
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            category = line.lstrip("#").strip() or category
            continue
        label = line.casefold()
        if label in seen:
            raise LexiconError(f"{origin}:{lineno}: duplicate label {label!r}")
        seen.add(label)
        types.append(PiiType(label, category, is_contact=label in CONTACT_LABELS))

    if strict and len(types) != EXPECTED_TYPE_COUNT:
        raise LexiconError(
            f"{origin}: expected {EXPECTED_TYPE_COUNT} labels, found {len(types)}"
        )
    logger.debug("loaded lexicon from %s: %d types", origin, len(types))
    return Lexicon(types)
