"""HTTP services: the triage review API and the mock token endpoint."""

from .app import create_app

__all__ = ["create_app"]
