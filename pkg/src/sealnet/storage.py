"""Content-addressed store of sealed payloads.

The store never sees a key and never decrypts anything; it holds either a
symmetric SealedBlob or a recipient-sealed envelope, addressed by the SHA-256
of its canonical encoding. Identical content stores once. Nothing is ever
deleted: the ledger references blobs forever.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .canon import sha256_hex
from .cryptobox import SealedBlob, SealedEnvelope
from .errors import SealnetError

SealedPayload = SealedBlob | SealedEnvelope

BLOB_KINDS = ("raw-data", "algorithm", "model", "prediction")


class NotFound(SealnetError):
    pass


class StorageFull(SealnetError):
    pass


def payload_from_dict(d: dict) -> SealedPayload:
    return SealedEnvelope.from_dict(d) if "epk" in d else SealedBlob.from_dict(d)


def blob_id_for(sealed: SealedPayload) -> str:
    """Content address: hex SHA-256 of the payload's canonical encoding."""
    return sha256_hex(sealed.canonical())


@dataclass
class StoredBlob:
    id: str
    sealed: SealedPayload
    kind: str
    size: int


class BlobStore:
    """In-memory blob store with optional on-disk persistence.

    put is idempotent by construction (content addressing), which also makes
    concurrent identical puts race-free.
    """

    def __init__(self, capacity: int | None = None):
        self._blobs: dict[str, StoredBlob] = {}
        self._capacity = capacity

    def __len__(self) -> int:
        return len(self._blobs)

    def put_blob(self, sealed: SealedPayload, kind: str) -> str:
        if kind not in BLOB_KINDS:
            raise ValueError(f"unknown blob kind {kind!r}")
        blob_id = blob_id_for(sealed)
        if blob_id in self._blobs:
            return blob_id
        if self._capacity is not None and len(self._blobs) >= self._capacity:
            raise StorageFull(f"store capacity {self._capacity} reached")
        self._blobs[blob_id] = StoredBlob(
            id=blob_id, sealed=sealed, kind=kind, size=len(sealed_ciphertext(sealed))
        )
        return blob_id

    def get_blob(self, blob_id: str) -> StoredBlob:
        blob = self._blobs.get(blob_id)
        if blob is None:
            raise NotFound(f"no blob {blob_id[:12]}")
        # Return a copy so callers cannot mutate the stored record.
        return replace(blob)

    def has_blob(self, blob_id: str) -> bool:
        return blob_id in self._blobs

    def ids(self) -> list[str]:
        return list(self._blobs)

    # -- HTTP-style interface ------------------------------------------------

    def route(self, method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
        """PUT /blobs, GET /blobs/{id}, HEAD /blobs/{id}."""
        if method == "PUT" and path == "/blobs":
            try:
                sealed = payload_from_dict(body["sealed"])
                blob_id = self.put_blob(sealed, body["kind"])
            except (KeyError, ValueError) as exc:
                return 400, {"error": str(exc)}
            except StorageFull as exc:
                return 507, {"error": str(exc)}
            return 200, {"id": blob_id}
        if path.startswith("/blobs/"):
            blob_id = path[len("/blobs/") :]
            if method == "HEAD":
                return (200, {}) if self.has_blob(blob_id) else (404, {})
            if method == "GET":
                try:
                    blob = self.get_blob(blob_id)
                except NotFound as exc:
                    return 404, {"error": str(exc)}
                return 200, {
                    "id": blob.id,
                    "kind": blob.kind,
                    "size": blob.size,
                    "sealed": blob.sealed.to_dict(),
                }
        return 404, {"error": f"no route {method} {path}"}

    # -- Persistence: one file per blob plus an ndjson manifest ---------------

    def save_dir(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "manifest.ndjson", "w", encoding="utf-8") as manifest:
            for blob in self._blobs.values():
                (directory / blob.id).write_bytes(blob.sealed.canonical())
                manifest.write(
                    json.dumps(
                        {"id": blob.id, "kind": blob.kind, "size": blob.size}, sort_keys=True
                    )
                    + "\n"
                )

    @classmethod
    def load_dir(cls, directory: str | Path, capacity: int | None = None) -> "BlobStore":
        directory = Path(directory)
        store = cls(capacity=capacity)
        manifest = directory / "manifest.ndjson"
        if not manifest.exists():
            return store
        with open(manifest, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                sealed = payload_from_dict(json.loads((directory / entry["id"]).read_text()))
                stored_id = store.put_blob(sealed, entry["kind"])
                if stored_id != entry["id"]:
                    raise SealnetError(f"blob {entry['id'][:12]} fails its content address")
        return store


def sealed_ciphertext(sealed: SealedPayload) -> bytes:
    return sealed.ct if isinstance(sealed, SealedEnvelope) else sealed.ciphertext
