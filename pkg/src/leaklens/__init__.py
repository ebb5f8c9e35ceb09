"""Privacy-audit toolkit for bearer links delivered over SMS.

The package covers the full audit pipeline: corpus ingestion, crawl-bundle
registration, JSON payload extraction, hierarchical PII screening with
strict verdict parsing, two-reviewer triage, post-validation analyses
(token entropy, enumeration simulation, exposure windows, access and
privilege classification, overfetch diffs), and report aggregation.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .config import AuditConfig, ConfigError, load_config
from .lexicon import Lexicon, load_lexicon
from .pipeline import Pipeline, PipelineError

__all__ = [
    "AuditConfig",
    "ConfigError",
    "Lexicon",
    "Pipeline",
    "PipelineError",
    "__version__",
    "load_config",
    "load_lexicon",
]
