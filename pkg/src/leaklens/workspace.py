"""On-disk layout of an audit workspace.

Every pipeline stage reads and writes well-known files under a single
root directory so that stages can be re-run independently and the whole
pipeline is resumable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .util import atomic_write


@dataclass(frozen=True)
class Workspace:
    root: Path

    # -- corpus ------------------------------------------------------
    @property
    def messages_path(self) -> Path:
        return self.root / "messages.jsonl"

    @property
    def urls_csv(self) -> Path:
        return self.root / "urls.csv"

    # -- capture -----------------------------------------------------
    @property
    def bundles_registry(self) -> Path:
        return self.root / "bundles.jsonl"

    # -- extraction --------------------------------------------------
    @property
    def payloads_path(self) -> Path:
        return self.root / "payloads.jsonl"

    # -- screening ---------------------------------------------------
    @property
    def audit_ui_csv(self) -> Path:
        return self.root / "audit_ui.csv"

    @property
    def audit_ui_jsonl(self) -> Path:
        return self.root / "audit_ui.jsonl"

    @property
    def audit_json_csv(self) -> Path:
        return self.root / "audit_json.csv"

    @property
    def audit_json_jsonl(self) -> Path:
        return self.root / "audit_json.jsonl"

    # -- triage ------------------------------------------------------
    @property
    def triage_path(self) -> Path:
        return self.root / "triage.json"

    @property
    def validated_path(self) -> Path:
        return self.root / "validated.jsonl"

    # -- analysis ----------------------------------------------------
    @property
    def analysis_dir(self) -> Path:
        return self.root / "analysis"

    @property
    def exposure_csv(self) -> Path:
        return self.analysis_dir / "exposure.csv"

    @property
    def profiles_csv(self) -> Path:
        return self.analysis_dir / "profiles.csv"

    @property
    def access_csv(self) -> Path:
        return self.analysis_dir / "access.csv"

    @property
    def privilege_csv(self) -> Path:
        return self.analysis_dir / "privilege.csv"

    @property
    def overfetch_csv(self) -> Path:
        return self.analysis_dir / "overfetch.csv"

    @property
    def tokens_csv(self) -> Path:
        return self.analysis_dir / "tokens.csv"

    @property
    def analysis_json(self) -> Path:
        return self.analysis_dir / "analysis.json"

    # -- report ------------------------------------------------------
    @property
    def report_dir(self) -> Path:
        return self.root / "report"

    # -- state -------------------------------------------------------
    @property
    def state_path(self) -> Path:
        return self.root / "pipeline_state.json"

    def ensure(self) -> "Workspace":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def read_state(self) -> dict:
        if not self.state_path.exists():
            return {}
        return json.loads(self.state_path.read_text(encoding="utf-8"))

    def write_state(self, state: dict) -> None:
        atomic_write(self.state_path, json.dumps(state, indent=2, sort_keys=True) + "\n")
