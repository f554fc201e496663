"""Playable two-player service: accounts, matchmaking, live games."""

from .core import ApiError, Service
from .app import create_app

__all__ = ["ApiError", "Service", "create_app"]
