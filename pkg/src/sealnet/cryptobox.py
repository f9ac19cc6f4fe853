"""Cryptographic core: authenticated symmetric sealing, n-of-n key splitting
across custodian nodes, signing identities, challenge-response share release,
and recipient-sealed envelopes.

Wire-level choices are fixed so independently written components interoperate
byte-exactly: AES-256-GCM with 12-byte nonces and 16-byte tags, Ed25519
signatures, X25519 ephemeral agreement for envelopes, lowercase hex for
binary values in JSON.
"""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed25519, x25519
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .canon import canonical_json
from .errors import SealnetError, TransportError

KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16
SIGNATURE_LEN = 64

# Domain separators for key derivations; changing them breaks interop.
_X25519_DERIVE = b"sealnet.x25519.v1:"
_ENVELOPE_KDF = b"sealnet.envelope.v1:"


class EntropyUnavailable(SealnetError):
    """The OS random source is not usable."""


class AuthenticationFailed(SealnetError):
    """AEAD authentication failed: wrong key or tampered ciphertext."""


class DecryptionFailed(SealnetError):
    """A sealed envelope could not be opened by this identity."""


class EmptyNodeList(SealnetError):
    pass


class DuplicateNode(SealnetError):
    pass


class MissingShares(SealnetError):
    """Fewer key shares than the split requires; n-of-n admits no subset."""


class UnknownWorker(SealnetError):
    """The presented public key is not assigned to the task on the ledger."""


class BadSignature(SealnetError):
    pass


class ChallengeReplayed(SealnetError):
    """The challenge was never issued by this node or was already consumed."""


class ShareNotHeld(SealnetError):
    pass


class AuthorizationDenied(SealnetError):
    """The task does not reference the requested record."""


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------

# Observer installed by the simulation harness to fingerprint every plaintext
# that enters or leaves a cryptographic boundary. None in production.
_taint_observer: Callable[[bytes], None] | None = None


def set_taint_observer(observer: Callable[[bytes], None] | None) -> None:
    global _taint_observer
    _taint_observer = observer


def _note_plaintext(buf: bytes) -> None:
    if _taint_observer is not None:
        _taint_observer(bytes(buf))


class Rng:
    """Byte source for keys, nonces, and identities.

    Without a seed it draws from the OS CSPRNG (production mode). With a seed
    it is a reproducible PRNG, acceptable only inside tests and simulations.
    """

    def __init__(self, seed: int | None = None):
        self._seeded = seed is not None
        self._prng = random.Random(seed) if seed is not None else None

    @property
    def seeded(self) -> bool:
        return self._seeded

    def bytes(self, n: int) -> bytes:
        if self._prng is not None:
            return self._prng.randbytes(n)
        try:
            return secrets.token_bytes(n)
        except NotImplementedError as exc:  # pragma: no cover - no OS entropy
            raise EntropyUnavailable(str(exc)) from exc

    def child(self, label: str) -> "Rng":
        """Derive an independent named stream (seeded mode only stays seeded)."""
        if self._prng is None:
            return Rng()
        material = hashlib.sha256(self._prng.randbytes(16) + label.encode()).digest()
        return Rng(int.from_bytes(material[:8], "big"))


def generate_key(rng: Rng) -> bytes:
    """Fresh 32-byte symmetric key."""
    return rng.bytes(KEY_LEN)


# ---------------------------------------------------------------------------
# Symmetric sealing (AES-256-GCM)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SealedBlob:
    """Authenticated ciphertext of any payload the platform stores."""

    nonce: bytes
    ciphertext: bytes
    tag: bytes

    def to_dict(self) -> dict:
        return {
            "nonce": self.nonce.hex(),
            "ciphertext": self.ciphertext.hex(),
            "tag": self.tag.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SealedBlob":
        return cls(
            nonce=bytes.fromhex(d["nonce"]),
            ciphertext=bytes.fromhex(d["ciphertext"]),
            tag=bytes.fromhex(d["tag"]),
        )

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())


def encrypt_blob(key: bytes, plaintext: bytes, rng: Rng) -> SealedBlob:
    if len(key) != KEY_LEN:
        raise ValueError("symmetric keys are 32 bytes")
    _note_plaintext(plaintext)
    nonce = rng.bytes(NONCE_LEN)
    out = AESGCM(key).encrypt(nonce, bytes(plaintext), None)
    return SealedBlob(nonce=nonce, ciphertext=out[:-TAG_LEN], tag=out[-TAG_LEN:])


def decrypt_blob(key: bytes, sealed: SealedBlob) -> bytes:
    if len(key) != KEY_LEN:
        raise ValueError("symmetric keys are 32 bytes")
    try:
        plain = AESGCM(key).decrypt(sealed.nonce, sealed.ciphertext + sealed.tag, None)
    except InvalidTag as exc:
        raise AuthenticationFailed("wrong key or tampered ciphertext") from exc
    _note_plaintext(plain)
    return plain


# ---------------------------------------------------------------------------
# n-of-n key splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeyShareSet:
    """One share per custodian node; all n XOR back to the key."""

    record_id: str
    shares: tuple[tuple[str, bytes], ...]  # (node_id, 32-byte share)
    n: int


def xor_bytes(parts: Iterable[bytes]) -> bytes:
    out: bytearray | None = None
    for p in parts:
        if out is None:
            out = bytearray(p)
            continue
        if len(p) != len(out):
            raise ValueError("shares must have equal length")
        for i, b in enumerate(p):
            out[i] ^= b
    if out is None:
        raise ValueError("nothing to xor")
    return bytes(out)


def split_key(key: bytes, node_ids: Sequence[str], rng: Rng, record_id: str = "") -> KeyShareSet:
    """Split into len(node_ids) shares: n-1 fresh random, last = key XOR rest."""
    if not node_ids:
        raise EmptyNodeList("at least one custodian node is required")
    if len(set(node_ids)) != len(node_ids):
        raise DuplicateNode("custodian node ids must be distinct")
    random_parts = [rng.bytes(KEY_LEN) for _ in range(len(node_ids) - 1)]
    last = xor_bytes([key, *random_parts]) if random_parts else bytes(key)
    parts = random_parts + [last]
    return KeyShareSet(
        record_id=record_id,
        shares=tuple(zip(node_ids, parts)),
        n=len(node_ids),
    )


def reconstruct_key(shares: Sequence[bytes], expected_n: int) -> bytes:
    """XOR of exactly expected_n shares; any other count is rejected."""
    if len(shares) != expected_n:
        raise MissingShares(f"need all {expected_n} shares, got {len(shares)}")
    return xor_bytes(shares)


# ---------------------------------------------------------------------------
# Identities and signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    """An Ed25519 signing identity.

    The 32-byte secret never leaves its owner. A companion X25519 keypair for
    sealed envelopes is derived from the same seed; its public half is the
    identity's published sealing key.
    """

    secret_key: bytes
    public_key: bytes
    seal_public: bytes

    @classmethod
    def generate(cls, rng: Rng) -> "Identity":
        return cls.from_secret(rng.bytes(KEY_LEN))

    @classmethod
    def from_secret(cls, secret: bytes) -> "Identity":
        signing = ed25519.Ed25519PrivateKey.from_private_bytes(secret)
        public = signing.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        xpriv = _derive_x25519(secret)
        xpub = xpriv.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return cls(secret_key=secret, public_key=public, seal_public=xpub)

    def sign(self, message: bytes) -> bytes:
        signing = ed25519.Ed25519PrivateKey.from_private_bytes(self.secret_key)
        return signing.sign(message)


def _derive_x25519(secret: bytes) -> x25519.X25519PrivateKey:
    seed = hashlib.sha256(_X25519_DERIVE + secret).digest()
    return x25519.X25519PrivateKey.from_private_bytes(seed)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


# ---------------------------------------------------------------------------
# Challenge-response share release
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Challenge:
    """Single-use nonce a custodian issues before releasing a share."""

    nonce: bytes
    task_id: str
    node_id: str

    def to_dict(self) -> dict:
        return {"nonce": self.nonce.hex(), "task_id": self.task_id, "node_id": self.node_id}

    def signing_bytes(self) -> bytes:
        return canonical_json(self.to_dict())


def sign_challenge(identity: Identity, challenge: Challenge) -> bytes:
    return identity.sign(challenge.signing_bytes())


class CustodianNode:
    """Holds one share of each record key and releases it only to a worker
    that proves, against the orchestrator's ledger, that it is assigned a
    task referencing that record.

    Challenges are single use: a challenge is consumed the moment it is
    presented, whether or not the release succeeds.
    """

    def __init__(self, node_id: str, rng: Rng):
        self.node_id = node_id
        self._rng = rng
        self._shares: dict[str, bytes] = {}
        self._outstanding: dict[bytes, Challenge] = {}
        self._consumed: set[bytes] = set()

    def receive_share(self, record_id: str, share: bytes) -> None:
        if len(share) != KEY_LEN:
            raise ValueError("shares are 32 bytes")
        self._shares[record_id] = bytes(share)

    def holds_share(self, record_id: str) -> bool:
        return record_id in self._shares

    def issue_challenge(self, task_id: str) -> Challenge:
        challenge = Challenge(nonce=self._rng.bytes(32), task_id=task_id, node_id=self.node_id)
        self._outstanding[challenge.nonce] = challenge
        return challenge

    def release_share(self, challenge: Challenge, signature: bytes, record_id: str, ledger_view) -> bytes:
        """Release this node's share of record_id to an authenticated worker.

        ledger_view must answer worker_for_task(task_id) and
        task_references(task_id, record_id); both are derived from the
        orchestrator's public ledger state.
        """
        issued = self._outstanding.pop(challenge.nonce, None)
        if challenge.nonce in self._consumed or issued != challenge:
            self._consumed.add(challenge.nonce)
            raise ChallengeReplayed("challenge unknown or already consumed")
        self._consumed.add(challenge.nonce)

        worker_pubkey = ledger_view.worker_for_task(challenge.task_id)
        if worker_pubkey is None:
            raise UnknownWorker("no worker assigned to this task on the ledger")
        if not verify_signature(worker_pubkey, challenge.signing_bytes(), signature):
            raise BadSignature("signature does not verify under the assigned worker key")
        if not ledger_view.task_references(challenge.task_id, record_id):
            raise AuthorizationDenied("task does not reference this record")
        share = self._shares.get(record_id)
        if share is None:
            raise ShareNotHeld(f"{self.node_id} holds no share for {record_id[:12]}")
        return share


def distribute_key(key: bytes, record_id: str, nodes: Sequence, rng: Rng) -> KeyShareSet:
    """Split a key across custodians and hand each node its share."""
    share_set = split_key(key, [n.node_id for n in nodes], rng, record_id=record_id)
    by_id = dict(share_set.shares)
    for node in nodes:
        node.receive_share(record_id, by_id[node.node_id])
    return share_set


def request_key(identity: Identity, task_id: str, record_id: str, nodes: Sequence, ledger_view) -> bytes:
    """Worker-side protocol: challenge every custodian, collect all shares,
    reconstruct the key. Any unreachable or refusing node means no key."""
    shares = []
    for node in nodes:
        try:
            challenge = node.issue_challenge(task_id)
            signature = sign_challenge(identity, challenge)
            shares.append(node.release_share(challenge, signature, record_id, ledger_view))
        except TransportError as exc:
            raise MissingShares(f"custodian unreachable: {exc}") from exc
    return reconstruct_key(shares, expected_n=len(nodes))


# ---------------------------------------------------------------------------
# Sealed envelopes (X25519 + AES-256-GCM)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SealedEnvelope:
    """Hybrid ciphertext only the holder of the recipient secret can open."""

    epk: bytes
    nonce: bytes
    ct: bytes
    tag: bytes

    def to_dict(self) -> dict:
        return {
            "epk": self.epk.hex(),
            "nonce": self.nonce.hex(),
            "ct": self.ct.hex(),
            "tag": self.tag.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SealedEnvelope":
        return cls(
            epk=bytes.fromhex(d["epk"]),
            nonce=bytes.fromhex(d["nonce"]),
            ct=bytes.fromhex(d["ct"]),
            tag=bytes.fromhex(d["tag"]),
        )

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())


def _envelope_key(shared: bytes, epk: bytes, recipient_pub: bytes) -> bytes:
    return hashlib.sha256(_ENVELOPE_KDF + shared + epk + recipient_pub).digest()


def seal_for_recipient(recipient_pubkey: bytes, plaintext: bytes, rng: Rng) -> SealedEnvelope:
    _note_plaintext(plaintext)
    esk = x25519.X25519PrivateKey.from_private_bytes(rng.bytes(KEY_LEN))
    epk = esk.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    shared = esk.exchange(x25519.X25519PublicKey.from_public_bytes(recipient_pubkey))
    key = _envelope_key(shared, epk, recipient_pubkey)
    nonce = rng.bytes(NONCE_LEN)
    out = AESGCM(key).encrypt(nonce, bytes(plaintext), None)
    return SealedEnvelope(epk=epk, nonce=nonce, ct=out[:-TAG_LEN], tag=out[-TAG_LEN:])


def open_sealed(identity: Identity, envelope: SealedEnvelope) -> bytes:
    xpriv = _derive_x25519(identity.secret_key)
    shared = xpriv.exchange(x25519.X25519PublicKey.from_public_bytes(envelope.epk))
    key = _envelope_key(shared, envelope.epk, identity.seal_public)
    try:
        plain = AESGCM(key).decrypt(envelope.nonce, envelope.ct + envelope.tag, None)
    except InvalidTag as exc:
        raise DecryptionFailed("not sealed to this identity") from exc
    _note_plaintext(plain)
    return plain
