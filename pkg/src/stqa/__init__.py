"""Spatio-temporal QA toolchain for instrument-annotated surgical video metadata."""
from __future__ import annotations

__version__ = "0.1.0"
