"""Canonical byte encodings.

Every digest and signature in the platform is computed over these bytes, so
the rules are fixed once: key-sorted, whitespace-free JSON, UTF-8, binary
values as lowercase hex. Floats serialize with Python's shortest round-trip
repr, which json.dumps already uses.
"""

import hashlib
import json


def canonical_json(obj) -> bytes:
    """Deterministic JSON bytes: sorted keys, no whitespace, UTF-8, no NaN."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
