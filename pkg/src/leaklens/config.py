"""Audit configuration.

A single JSON file drives the whole pipeline; every setting has a safe
default so a minimal config only needs a workspace and a corpus path.
The CLI looks for ``--config`` first and falls back to the
``LEAKLENS_CONFIG`` environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_VAR = "LEAKLENS_CONFIG"


class ConfigError(ValueError):
    """Invalid or missing configuration."""


@dataclass
class AuditConfig:
    workspace: Path
    corpus_path: Path | None = None
    bundle_dirs: list[Path] = field(default_factory=list)
    adapter: dict = field(default_factory=lambda: {"type": "rule_based"})
    fuzzy_accept: float = 0.82
    fuzzy_margin: float = 0.05
    chunk_size: int = 50_000
    chunk_overlap: int = 5_000
    allowlist: list[str] = field(default_factory=list)
    pacing_seconds: float = 2.0
    enumeration_seed: int = 1337
    enumeration_tries: int = 10
    enumeration_trials: int = 10_000
    mutation_seed: int = 99
    scripted_labels: Path | None = None
    manual_findings: dict[str, list[str]] = field(default_factory=dict)
    mock: dict = field(default_factory=dict)
    config_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, raw: dict, config_dir: Path) -> "AuditConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        if "workspace" not in raw:
            raise ConfigError("config requires a 'workspace' path")

        def respath(value: str) -> Path:
            path = Path(value)
            return path if path.is_absolute() else config_dir / path

        known = {
            "workspace", "corpus", "bundle_dirs", "adapter", "fuzzy", "chunk",
            "allowlist", "pacing_seconds", "seeds", "enumeration",
            "scripted_labels", "manual_findings", "mock",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

        fuzzy = raw.get("fuzzy", {})
        chunk = raw.get("chunk", {})
        seeds = raw.get("seeds", {})
        enumeration = raw.get("enumeration", {})
        manual = raw.get("manual_findings", {})
        if not isinstance(manual, dict):
            raise ConfigError("manual_findings must map domain -> [categories]")

        return cls(
            workspace=respath(raw["workspace"]),
            corpus_path=respath(raw["corpus"]) if raw.get("corpus") else None,
            bundle_dirs=[respath(d) for d in raw.get("bundle_dirs", [])],
            adapter=raw.get("adapter", {"type": "rule_based"}),
            fuzzy_accept=float(fuzzy.get("accept_threshold", 0.82)),
            fuzzy_margin=float(fuzzy.get("margin", 0.05)),
            chunk_size=int(chunk.get("size", 50_000)),
            chunk_overlap=int(chunk.get("overlap", 5_000)),
            allowlist=list(raw.get("allowlist", [])),
            pacing_seconds=float(raw.get("pacing_seconds", 2.0)),
            enumeration_seed=int(seeds.get("enumeration", 1337)),
            enumeration_tries=int(enumeration.get("tries", 10)),
            enumeration_trials=int(enumeration.get("trials", 10_000)),
            mutation_seed=int(seeds.get("mutation", 99)),
            scripted_labels=(respath(raw["scripted_labels"])
                             if raw.get("scripted_labels") else None),
            manual_findings={str(k): list(v) for k, v in manual.items()},
            mock=raw.get("mock", {}),
            config_dir=config_dir,
        )


def load_config(path: str | Path | None = None) -> AuditConfig:
    """Load config from ``path``, or from ``$LEAKLENS_CONFIG`` when omitted."""
    if path is None:
        env = os.environ.get(ENV_VAR)
        if not env:
            raise ConfigError(
                f"no config path given and {ENV_VAR} is not set")
        path = env
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return AuditConfig.from_dict(raw, path.resolve().parent)
