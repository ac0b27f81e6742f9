"""HTTP service wrapping the clustering engine."""

from .app import app, create_app

__all__ = ["app", "create_app"]
