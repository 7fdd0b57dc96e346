"""HTTP service wrapping the core package: stateless JSON endpoints for the
codec, rewards, advantage estimation, task synthesis, transfer metrics, and
full training runs."""

from .app import create_app

__all__ = ["create_app"]
