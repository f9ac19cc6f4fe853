"""The data owner's key vault.

Holds the owner identity and one symmetric key per uploaded record; that is
the only place keys live outside split shares. At rest the vault is a single
authenticated ciphertext under a passphrase-derived key (scrypt, parameters
fixed so tests are deterministic).
"""

from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from ..canon import canonical_json
from ..cryptobox import (
    KEY_LEN,
    AuthenticationFailed,
    Identity,
    Rng,
    SealedBlob,
    decrypt_blob,
    encrypt_blob,
)

# scrypt cost parameters; memory-hard but fast enough for a test suite.
_SCRYPT_N = 2**14
_SCRYPT_R = 8
_SCRYPT_P = 1


@dataclass
class KeyVault:
    identity: Identity
    account_id: str
    record_keys: dict[str, bytes] = field(default_factory=dict)
    record_meta: dict[str, dict] = field(default_factory=dict)
    content_index: dict[str, str] = field(default_factory=dict)  # plaintext digest -> record
    predict_tasks: dict[str, str] = field(default_factory=dict)  # task_id -> input record

    def remember_record(self, record_id: str, key: bytes, plaintext: bytes, meta: dict) -> None:
        self.record_keys[record_id] = key
        self.record_meta[record_id] = dict(meta)
        self.content_index[hashlib.sha256(plaintext).hexdigest()] = record_id

    def known_record_for(self, plaintext: bytes) -> str | None:
        return self.content_index.get(hashlib.sha256(plaintext).hexdigest())

    def owns(self, record_id: str) -> bool:
        return record_id in self.record_keys

    # -- persistence -----------------------------------------------------------

    def _payload(self) -> dict:
        return {
            "identity_secret": self.identity.secret_key.hex(),
            "account_id": self.account_id,
            "record_keys": {r: k.hex() for r, k in self.record_keys.items()},
            "record_meta": self.record_meta,
            "content_index": self.content_index,
            "predict_tasks": self.predict_tasks,
        }

    def save(self, path: str | Path, passphrase: str) -> None:
        salt = secrets.token_bytes(16)
        key = _derive_key(passphrase, salt)
        sealed = encrypt_blob(key, canonical_json(self._payload()), Rng())
        doc = {"kdf": "scrypt", "n": _SCRYPT_N, "r": _SCRYPT_R, "p": _SCRYPT_P,
               "salt": salt.hex(), "sealed": sealed.to_dict()}
        Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")

    @classmethod
    def open(cls, path: str | Path, passphrase: str) -> "KeyVault":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        key = _derive_key(passphrase, bytes.fromhex(doc["salt"]),
                          n=doc.get("n", _SCRYPT_N), r=doc.get("r", _SCRYPT_R),
                          p=doc.get("p", _SCRYPT_P))
        # A wrong passphrase fails AEAD authentication here.
        payload = json.loads(decrypt_blob(key, SealedBlob.from_dict(doc["sealed"])))
        vault = cls(
            identity=Identity.from_secret(bytes.fromhex(payload["identity_secret"])),
            account_id=payload["account_id"],
        )
        vault.record_keys = {r: bytes.fromhex(k) for r, k in payload["record_keys"].items()}
        vault.record_meta = payload["record_meta"]
        vault.content_index = payload["content_index"]
        vault.predict_tasks = payload["predict_tasks"]
        return vault


def keygen(account_id: str, rng: Rng | None = None) -> KeyVault:
    """Fresh owner identity with an empty key map."""
    return KeyVault(identity=Identity.generate(rng or Rng()), account_id=account_id)


def _derive_key(passphrase: str, salt: bytes, n: int = _SCRYPT_N, r: int = _SCRYPT_R,
                p: int = _SCRYPT_P) -> bytes:
    return hashlib.scrypt(
        passphrase.encode("utf-8"), salt=salt, n=n, r=r, p=p, dklen=KEY_LEN,
        maxmem=128 * 1024 * 1024,
    )
