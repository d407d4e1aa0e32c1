"""Embedding service: multilingual text and CLIP image encoders over HTTP."""

__version__ = "0.1.0"

from .app import create_app
from .backends import HashBackend, SentenceTransformerBackend, backend_from_env

__all__ = ["create_app", "HashBackend", "SentenceTransformerBackend", "backend_from_env"]
