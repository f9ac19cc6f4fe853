"""Plaintext taint tracking by content fingerprint.

Every buffer that crosses a cryptographic boundary (input to encrypt/seal,
output of decrypt/open) is fingerprinted. Messages and retained state are
then scanned for those buffers, raw or hex-encoded, by walking their
structure. Content-digest tracking is deliberately language-agnostic: no
memory instrumentation, just bytes.

Buffers shorter than MIN_TRACKED_LEN are fingerprinted but not scanned for;
substrings that short match everywhere and prove nothing.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field

MIN_TRACKED_LEN = 8
_MAX_DEPTH = 12


@dataclass
class TaintHit:
    where: str  # "message" or "state"
    actor: str  # offending actor (message source or state owner)
    detail: str
    fingerprint: str


@dataclass
class TaintMap:
    buffers: dict[str, bytes] = field(default_factory=dict)
    observed_by: dict[str, set[str]] = field(default_factory=dict)

    def register(self, buf: bytes) -> str:
        digest = hashlib.sha256(buf).hexdigest()
        self.buffers.setdefault(digest, bytes(buf))
        return digest

    def _scannable(self) -> list[tuple[str, bytes, bytes]]:
        out = []
        for digest, buf in self.buffers.items():
            if len(buf) >= MIN_TRACKED_LEN:
                out.append((digest, buf, buf.hex().encode("ascii")))
        return out

    def find_in_value(self, value) -> set[str]:
        """Fingerprints of tainted buffers appearing anywhere inside value."""
        leaves: list[bytes] = []
        _collect_leaves(value, leaves, 0, set())
        found: set[str] = set()
        for digest, raw, hexed in self._scannable():
            for leaf in leaves:
                if raw in leaf or hexed in leaf:
                    found.add(digest)
                    break
        return found

    def note_observed(self, actor: str, fingerprints: set[str]) -> None:
        if fingerprints:
            self.observed_by.setdefault(actor, set()).update(fingerprints)


def _collect_leaves(value, out: list[bytes], depth: int, seen: set[int]) -> None:
    if depth > _MAX_DEPTH or value is None:
        return
    if isinstance(value, (bytes, bytearray, memoryview)):
        out.append(bytes(value))
        return
    if isinstance(value, str):
        out.append(value.encode("utf-8", errors="ignore"))
        return
    if isinstance(value, (int, float, bool)):
        return
    if id(value) in seen:
        return
    seen.add(id(value))
    if isinstance(value, dict):
        for k, v in value.items():
            _collect_leaves(k, out, depth + 1, seen)
            _collect_leaves(v, out, depth + 1, seen)
        return
    if isinstance(value, (list, tuple, set, frozenset)):
        for v in value:
            _collect_leaves(v, out, depth + 1, seen)
        return
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        for f in dataclasses.fields(value):
            _collect_leaves(getattr(value, f.name), out, depth + 1, seen)
        return
    inner = getattr(value, "__dict__", None)
    if inner:
        _collect_leaves(inner, out, depth + 1, seen)
