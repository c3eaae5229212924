"""HTTP service wrapping the core package; the CLI is a thin client."""

from .app import create_app

__all__ = ["create_app"]
