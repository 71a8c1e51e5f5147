"""Deterministic serialization helpers: canonical JSON and stable digests."""

from __future__ import annotations

import hashlib
import json

import numpy as np

__all__ = ["canonical_json", "stable_digest", "json_ready"]


def json_ready(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, np.ndarray):
        return [json_ready(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(x) for x in obj]
    return obj


def canonical_json(obj) -> str:
    """Sorted-key, minimal-separator JSON; floats keep full round-trip repr."""
    return json.dumps(json_ready(obj), sort_keys=True, separators=(",", ":"))


def stable_digest(obj) -> str:
    """Short stable content digest of a JSON-serializable object."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]
