"""Utility helpers for the ONH robustness pipeline."""

from .hashing import array_digest, canonical_json, config_hash
from .resources import RESOURCE_ROOT, load_resource_json

__all__ = [
    "RESOURCE_ROOT",
    "array_digest",
    "canonical_json",
    "config_hash",
    "load_resource_json",
]
