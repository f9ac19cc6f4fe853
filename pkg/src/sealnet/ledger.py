"""Append-only, hash-chained, signed event log.

Every platform operation (registration, task creation, worker assignment,
performance, prediction, payment) lands here as one event per block. Blocks
are SHA-256 chained and Ed25519 signed by the orchestrator, so any reader can
audit the full history without trusting the writer. Persistence is
newline-delimited JSON, one block per line, binary fields as lowercase hex.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .canon import canonical_json, sha256
from .cryptobox import Identity, verify_signature
from .errors import SealnetError

GENESIS_PREV_HASH = bytes(32)

KIND_LEARN = "learn"
KIND_PREDICT = "predict"


class InvalidReference(SealnetError):
    """The event refers to an unknown task/record or violates event rules."""


class SignerUnavailable(SealnetError):
    """This ledger handle has no signing identity."""


class InvalidChain(SealnetError):
    """A query was asked over a chain that does not verify."""


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DataRegistered:
    record_id: str
    owner_id: str
    kind: str  # raw-data | algorithm | model
    challenge_id: str


@dataclass(frozen=True)
class TaskCreated:
    task_id: str
    kind: str  # learn | predict
    data_ids: tuple[str, ...]
    algorithm_or_model_id: str
    challenge_id: str
    # Predict tasks carry who pays and how much so balances replay from the
    # chain alone; learn tasks leave both unset.
    requester: str | None = None
    payment: int | None = None
    # Shadow learn tasks exist only to measure contributivity; basis_task_id
    # links a leave-one-out run to its full-dataset baseline.
    shadow: bool = False
    basis_task_id: str | None = None


@dataclass(frozen=True)
class WorkerAssigned:
    task_id: str
    worker_pubkey: bytes


@dataclass(frozen=True)
class TaskRequeued:
    """A previously assigned task returned to the queue (worker died)."""

    task_id: str
    worker_pubkey: bytes


@dataclass(frozen=True)
class PerformanceRecorded:
    task_id: str
    model_id: str
    performance: float


@dataclass(frozen=True)
class PredictionRecorded:
    task_id: str
    model_id: str
    sealed_output_id: str


@dataclass(frozen=True)
class PaymentRecorded:
    payer: str
    splits: tuple[tuple[str, int], ...]  # (account_id, credits)


Event = (
    DataRegistered
    | TaskCreated
    | WorkerAssigned
    | TaskRequeued
    | PerformanceRecorded
    | PredictionRecorded
    | PaymentRecorded
)

_EVENT_TYPES = {
    cls.__name__: cls
    for cls in (
        DataRegistered,
        TaskCreated,
        WorkerAssigned,
        TaskRequeued,
        PerformanceRecorded,
        PredictionRecorded,
        PaymentRecorded,
    )
}


def event_to_dict(event: Event) -> dict:
    d: dict = {"type": type(event).__name__}
    if isinstance(event, DataRegistered):
        d.update(
            record_id=event.record_id,
            owner_id=event.owner_id,
            kind=event.kind,
            challenge_id=event.challenge_id,
        )
    elif isinstance(event, TaskCreated):
        d.update(
            task_id=event.task_id,
            kind=event.kind,
            data_ids=list(event.data_ids),
            algorithm_or_model_id=event.algorithm_or_model_id,
            challenge_id=event.challenge_id,
            shadow=event.shadow,
        )
        if event.requester is not None:
            d["requester"] = event.requester
        if event.payment is not None:
            d["payment"] = event.payment
        if event.basis_task_id is not None:
            d["basis_task_id"] = event.basis_task_id
    elif isinstance(event, (WorkerAssigned, TaskRequeued)):
        d.update(task_id=event.task_id, worker_pubkey=event.worker_pubkey.hex())
    elif isinstance(event, PerformanceRecorded):
        d.update(task_id=event.task_id, model_id=event.model_id, performance=event.performance)
    elif isinstance(event, PredictionRecorded):
        d.update(
            task_id=event.task_id,
            model_id=event.model_id,
            sealed_output_id=event.sealed_output_id,
        )
    elif isinstance(event, PaymentRecorded):
        d.update(payer=event.payer, splits=[[a, int(n)] for a, n in event.splits])
    else:  # pragma: no cover - exhaustive above
        raise TypeError(f"unknown event {event!r}")
    return d


def event_from_dict(d: dict) -> Event:
    cls = _EVENT_TYPES.get(d.get("type", ""))
    if cls is None:
        raise ValueError(f"unknown event type {d.get('type')!r}")
    if cls is DataRegistered:
        return DataRegistered(d["record_id"], d["owner_id"], d["kind"], d["challenge_id"])
    if cls is TaskCreated:
        return TaskCreated(
            task_id=d["task_id"],
            kind=d["kind"],
            data_ids=tuple(d["data_ids"]),
            algorithm_or_model_id=d["algorithm_or_model_id"],
            challenge_id=d["challenge_id"],
            requester=d.get("requester"),
            payment=d.get("payment"),
            shadow=bool(d.get("shadow", False)),
            basis_task_id=d.get("basis_task_id"),
        )
    if cls is WorkerAssigned:
        return WorkerAssigned(d["task_id"], bytes.fromhex(d["worker_pubkey"]))
    if cls is TaskRequeued:
        return TaskRequeued(d["task_id"], bytes.fromhex(d["worker_pubkey"]))
    if cls is PerformanceRecorded:
        return PerformanceRecorded(d["task_id"], d["model_id"], float(d["performance"]))
    if cls is PredictionRecorded:
        return PredictionRecorded(d["task_id"], d["model_id"], d["sealed_output_id"])
    return PaymentRecorded(d["payer"], tuple((a, int(n)) for a, n in d["splits"]))


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: int  # integer milliseconds from the injected clock
    event: Event
    signature: bytes

    def signing_payload(self) -> bytes:
        return canonical_json(
            {
                "index": self.index,
                "prev_hash": self.prev_hash.hex(),
                "timestamp": self.timestamp,
                "event": event_to_dict(self.event),
            }
        )

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "prev_hash": self.prev_hash.hex(),
            "timestamp": self.timestamp,
            "event": event_to_dict(self.event),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Block":
        return cls(
            index=int(d["index"]),
            prev_hash=bytes.fromhex(d["prev_hash"]),
            timestamp=int(d["timestamp"]),
            event=event_from_dict(d["event"]),
            signature=bytes.fromhex(d["signature"]),
        )

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())

    def digest(self) -> bytes:
        return sha256(self.canonical())


# ---------------------------------------------------------------------------
# Referential rules
# ---------------------------------------------------------------------------


class _RefState:
    """Fold state for the per-event referential rules."""

    def __init__(self):
        self.task_kinds: dict[str, str] = {}
        self.assigned: dict[str, set[bytes]] = {}

    def check(self, event: Event) -> str | None:
        """Return a reason string if the event is invalid against the fold."""
        if isinstance(event, TaskCreated):
            if event.task_id in self.task_kinds:
                return f"duplicate task id {event.task_id}"
            if event.kind not in (KIND_LEARN, KIND_PREDICT):
                return f"unknown task kind {event.kind}"
            if event.payment is not None and event.payment <= 0:
                return "payment must be positive"
        elif isinstance(event, WorkerAssigned):
            if event.task_id not in self.task_kinds:
                return f"assignment refers to unknown task {event.task_id}"
        elif isinstance(event, TaskRequeued):
            if event.task_id not in self.task_kinds:
                return f"requeue refers to unknown task {event.task_id}"
            if event.worker_pubkey not in self.assigned.get(event.task_id, set()):
                return "requeue names a worker never assigned to the task"
        elif isinstance(event, PerformanceRecorded):
            kind = self.task_kinds.get(event.task_id)
            if kind is None:
                return f"performance refers to unknown task {event.task_id}"
            if kind != KIND_LEARN:
                return "performance recorded for a non-learn task"
            if not (0.0 <= event.performance <= 1.0):
                return f"performance {event.performance} outside [0, 1]"
        elif isinstance(event, PredictionRecorded):
            kind = self.task_kinds.get(event.task_id)
            if kind is None:
                return f"prediction refers to unknown task {event.task_id}"
            if kind != KIND_PREDICT:
                return "prediction recorded for a non-predict task"
        elif isinstance(event, PaymentRecorded):
            if any(n < 0 for _, n in event.splits):
                return "negative payment split"
        return None

    def apply(self, event: Event) -> None:
        if isinstance(event, TaskCreated):
            self.task_kinds[event.task_id] = event.kind
        elif isinstance(event, WorkerAssigned):
            self.assigned.setdefault(event.task_id, set()).add(event.worker_pubkey)


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------


class Ledger:
    """Single-writer chain handle. Appends validate, sign, and link blocks;
    reading and verification need only the orchestrator's public key."""

    def __init__(self, signer: Identity | None = None, blocks: Sequence[Block] | None = None):
        self._signer = signer
        self._blocks: list[Block] = list(blocks or [])
        self._refs = _RefState()
        for block in self._blocks:
            self._refs.apply(block.event)

    @property
    def blocks(self) -> list[Block]:
        return list(self._blocks)

    @property
    def signer_public_key(self) -> bytes | None:
        return self._signer.public_key if self._signer else None

    def __len__(self) -> int:
        return len(self._blocks)

    def head(self) -> Block | None:
        return self._blocks[-1] if self._blocks else None

    def append_event(self, event: Event, clock: int) -> Block:
        if self._signer is None:
            raise SignerUnavailable("this ledger handle cannot sign blocks")
        reason = self._refs.check(event)
        if reason is not None:
            raise InvalidReference(reason)
        index = len(self._blocks)
        prev_hash = self._blocks[-1].digest() if self._blocks else GENESIS_PREV_HASH
        unsigned = Block(
            index=index, prev_hash=prev_hash, timestamp=int(clock), event=event, signature=b""
        )
        signature = self._signer.sign(unsigned.signing_payload())
        block = replace(unsigned, signature=signature)
        self._blocks.append(block)
        self._refs.apply(event)
        return block


def verify_chain(blocks: Sequence[Block], orchestrator_pubkey: bytes) -> int | None:
    """Return None if the chain verifies, else the first invalid index.

    Checks, in order per block: index continuity, the genesis/prev-hash
    convention, the orchestrator signature, and the event referential rules.
    """
    refs = _RefState()
    for i, block in enumerate(blocks):
        if block.index != i:
            return i
        expected_prev = GENESIS_PREV_HASH if i == 0 else blocks[i - 1].digest()
        if block.prev_hash != expected_prev:
            return i
        if not verify_signature(orchestrator_pubkey, block.signing_payload(), block.signature):
            return i
        if refs.check(block.event) is not None:
            return i
        refs.apply(block.event)
    return None


def chain_digest(blocks: Sequence[Block]) -> str:
    """Digest of the whole chain, for cheap equality in traces and tests."""
    h = hashlib.sha256()
    for block in blocks:
        h.update(block.digest())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Tuple queries
# ---------------------------------------------------------------------------


@dataclass
class LearningTuple:
    """One row of the learning ledger: which datum went into which model by
    which worker, and how well it performed. The model column starts as the
    algorithm being applied and becomes the produced model on completion."""

    task_id: str
    data_id: str
    model_id: str
    worker_id: bytes | None = None
    performance: float | None = None

    @property
    def pending(self) -> bool:
        return self.performance is None


@dataclass
class PredictionTuple:
    """Prediction-ledger row; never carries a performance."""

    task_id: str
    data_id: str
    model_id: str
    worker_id: bytes | None = None
    sealed_output_id: str | None = None

    @property
    def pending(self) -> bool:
        return self.sealed_output_id is None


def _fold_tuples(blocks: Iterable[Block], kind: str):
    by_task: dict[str, list] = {}
    order: list[str] = []
    for block in blocks:
        event = block.event
        if isinstance(event, TaskCreated) and event.kind == kind:
            cls = LearningTuple if kind == KIND_LEARN else PredictionTuple
            by_task[event.task_id] = [
                cls(task_id=event.task_id, data_id=d, model_id=event.algorithm_or_model_id)
                for d in event.data_ids
            ]
            order.append(event.task_id)
        elif isinstance(event, WorkerAssigned):
            for t in by_task.get(event.task_id, []):
                t.worker_id = event.worker_pubkey
        elif isinstance(event, PerformanceRecorded) and kind == KIND_LEARN:
            if event.task_id not in by_task:
                # Unknown learn task here means the chain was never verified.
                raise InvalidChain(f"performance for unknown task {event.task_id}")
            for t in by_task[event.task_id]:
                t.performance = event.performance
                if event.model_id:
                    t.model_id = event.model_id
        elif isinstance(event, PredictionRecorded) and kind == KIND_PREDICT:
            if event.task_id not in by_task:
                raise InvalidChain(f"prediction for unknown task {event.task_id}")
            for t in by_task[event.task_id]:
                t.sealed_output_id = event.sealed_output_id
                if event.model_id:
                    t.model_id = event.model_id
    return [t for task_id in order for t in by_task[task_id]]


def query_learning(
    blocks: Iterable[Block],
    *,
    data_id: str | None = None,
    model_id: str | None = None,
    pending_only: bool = False,
    completed_only: bool = False,
) -> list[LearningTuple]:
    tuples = _fold_tuples(blocks, KIND_LEARN)
    if data_id is not None:
        tuples = [t for t in tuples if t.data_id == data_id]
    if model_id is not None:
        tuples = [t for t in tuples if t.model_id == model_id]
    if pending_only:
        tuples = [t for t in tuples if t.pending]
    if completed_only:
        tuples = [t for t in tuples if not t.pending]
    return tuples


def query_predictions(
    blocks: Iterable[Block],
    *,
    data_id: str | None = None,
    model_id: str | None = None,
    pending_only: bool = False,
    completed_only: bool = False,
) -> list[PredictionTuple]:
    tuples = _fold_tuples(blocks, KIND_PREDICT)
    if data_id is not None:
        tuples = [t for t in tuples if t.data_id == data_id]
    if model_id is not None:
        tuples = [t for t in tuples if t.model_id == model_id]
    if pending_only:
        tuples = [t for t in tuples if t.pending]
    if completed_only:
        tuples = [t for t in tuples if not t.pending]
    return tuples


# ---------------------------------------------------------------------------
# Persistence (newline-delimited JSON)
# ---------------------------------------------------------------------------


def save_chain(blocks: Sequence[Block], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for block in blocks:
            fh.write(block.canonical().decode("utf-8"))
            fh.write("\n")


def load_chain(path: str | Path) -> list[Block]:
    blocks = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                blocks.append(Block.from_dict(json.loads(line)))
    return blocks
