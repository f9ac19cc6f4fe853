"""Fat-client operations: encrypt and upload records, submit algorithm specs,
request and fetch predictions, audit the ledger, submit label corrections.

Plaintext and symmetric keys exist only here (and transiently inside
workers); everything the client sends out is ciphertext, key shares, or
signed metadata. Uploads are atomic with respect to registration: the
orchestrator learns about a record last, so any earlier failure leaves no
trace on the ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..cryptobox import (
    Rng,
    distribute_key,
    encrypt_blob,
    generate_key,
    decrypt_blob,
    open_sealed,
)
from ..errors import SealnetError
from ..ledger import (
    DataRegistered,
    LearningTuple,
    PredictionRecorded,
    PredictionTuple,
    query_learning,
    query_predictions,
    verify_chain,
)
from ..compute.dataset import Dataset, ParseError, parse_csv, to_csv
from ..compute.trainers import parse_trainer_spec
from .vault import KeyVault


class LabelMismatch(SealnetError):
    pass


class NotReady(SealnetError):
    pass


class NotOwner(SealnetError):
    pass


class IndexOutOfRange(SealnetError):
    pass


class BadLabel(SealnetError):
    pass


@dataclass(frozen=True)
class AnnotationCorrection:
    source_record_id: str
    row_index: int
    corrected_label: str
    annotator: str


@dataclass
class AuditReport:
    valid: bool
    first_invalid_index: int | None
    learning: list[LearningTuple]
    predictions: list[PredictionTuple]
    registered_records: list[str]  # every DataRegistered record id, chain order

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "first_invalid_index": self.first_invalid_index,
            "registered_records": self.registered_records,
            "learning": [
                {
                    "task_id": t.task_id,
                    "data_id": t.data_id,
                    "model_id": t.model_id,
                    "worker_id": t.worker_id.hex() if t.worker_id else None,
                    "performance": t.performance,
                }
                for t in self.learning
            ],
            "predictions": [
                {
                    "task_id": t.task_id,
                    "data_id": t.data_id,
                    "model_id": t.model_id,
                    "worker_id": t.worker_id.hex() if t.worker_id else None,
                    "sealed_output_id": t.sealed_output_id,
                }
                for t in self.predictions
            ],
        }


def _read_source(source: str | Path) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    return source


class Client:
    """One data owner's handle on the platform."""

    def __init__(self, vault: KeyVault, *, orchestrator, storage, custodians: Sequence, rng: Rng):
        self.vault = vault
        self.orchestrator = orchestrator
        self.storage = storage
        self.custodians = custodians
        self.rng = rng

    # -- internal upload plumbing ------------------------------------------------

    def _seal_and_store(self, plaintext: bytes, kind: str, meta: dict) -> str:
        """Encrypt under a fresh key, store, split the key to custodians.

        Re-uploading identical content reuses the existing record id instead
        of minting a second ciphertext of the same plaintext.
        """
        existing = self.vault.known_record_for(plaintext)
        if existing is not None:
            return existing
        key = generate_key(self.rng)
        sealed = encrypt_blob(key, plaintext, self.rng)
        record_id = self.storage.put_blob(sealed, kind)
        distribute_key(key, record_id, self.custodians, self.rng)
        self.vault.remember_record(record_id, key, plaintext, meta)
        return record_id

    # -- uploads -------------------------------------------------------------------

    def upload_data(self, csv_source: str | Path, challenge_id: str) -> str:
        """Encrypt a labeled CSV, store it, register it as training data."""
        text = _read_source(csv_source)
        dataset = parse_csv(text)
        if not dataset.labeled:
            raise ParseError("training data needs a label column")
        spec = self.orchestrator.challenge_info(challenge_id)
        bad = sorted(set(dataset.labels) - set(spec.label_set))
        if bad:
            raise LabelMismatch(f"labels {bad} not in challenge label set")
        record_id = self._seal_and_store(
            text.encode("utf-8"),
            "raw-data",
            {"kind": "raw-data", "challenge_id": challenge_id,
             "rows": len(dataset), "dimension": dataset.dimension},
        )
        self.orchestrator.register_data(self.vault.account_id, record_id, "raw-data", challenge_id)
        return record_id

    def submit_algorithm(self, spec_source: str | Path, challenge_id: str) -> str:
        """Validate a trainer spec, store it sealed, register it."""
        text = _read_source(spec_source)
        trainer = parse_trainer_spec(text)
        self.orchestrator.challenge_info(challenge_id)
        record_id = self._seal_and_store(
            trainer.canonical(),
            "algorithm",
            {"kind": "algorithm", "challenge_id": challenge_id, "trainer": trainer.name},
        )
        self.orchestrator.register_data(self.vault.account_id, record_id, "algorithm", challenge_id)
        return record_id

    def create_challenge(
        self, challenge_id: str, label_set: Sequence[str], validation_csvs: Sequence[str | Path],
        description: str = "",
    ) -> list[str]:
        """Upload held-out validation data and open a challenge over it."""
        validation_ids = []
        for source in validation_csvs:
            text = _read_source(source)
            dataset = parse_csv(text)
            if not dataset.labeled:
                raise ParseError("validation data needs a label column")
            bad = sorted(set(dataset.labels) - set(label_set))
            if bad:
                raise LabelMismatch(f"labels {bad} not in challenge label set")
            validation_ids.append(
                self._seal_and_store(
                    text.encode("utf-8"),
                    "raw-data",
                    {"kind": "validation", "challenge_id": challenge_id,
                     "rows": len(dataset), "dimension": dataset.dimension},
                )
            )
        self.orchestrator.create_challenge(challenge_id, label_set, validation_ids, description)
        return validation_ids

    # -- predictions -----------------------------------------------------------------

    def request_prediction(self, csv_source: str | Path, challenge_id: str, payment: int) -> str:
        """Upload an unlabeled CSV and queue a paid prediction over it."""
        text = _read_source(csv_source)
        dataset = parse_csv(text)
        if dataset.labeled:
            raise ParseError("prediction input must not carry a label column")
        record_id = self._seal_and_store(
            text.encode("utf-8"),
            "raw-data",
            {"kind": "predict-input", "challenge_id": challenge_id,
             "rows": len(dataset), "dimension": dataset.dimension},
        )
        task = self.orchestrator.request_prediction(
            self.vault.account_id, record_id, challenge_id, payment
        )
        self.vault.predict_tasks[task.task_id] = record_id
        return task.task_id

    def fetch_prediction(self, task_id: str) -> list[str]:
        """Open the sealed output for one of this client's prediction tasks."""
        blocks = self.orchestrator.chain_blocks()
        output_id = None
        for block in blocks:
            event = block.event
            if isinstance(event, PredictionRecorded) and event.task_id == task_id:
                output_id = event.sealed_output_id
        if output_id is None:
            raise NotReady(f"no prediction recorded yet for {task_id}")
        blob = self.storage.get_blob(output_id)
        payload = json.loads(open_sealed(self.vault.identity, blob.sealed))
        return list(payload["labels"])

    # -- auditing -------------------------------------------------------------------

    def audit(self) -> AuditReport:
        """Verify the full chain and list every operation touching my records."""
        blocks = self.orchestrator.chain_blocks()
        first_invalid = verify_chain(blocks, self.orchestrator.public_key)
        mine = set(self.vault.record_keys)
        learning: list[LearningTuple] = []
        predictions: list[PredictionTuple] = []
        registered: list[str] = []
        if first_invalid is None:
            learning = [t for t in query_learning(blocks) if t.data_id in mine]
            predictions = [t for t in query_predictions(blocks) if t.data_id in mine]
            registered = [
                b.event.record_id for b in blocks if isinstance(b.event, DataRegistered)
            ]
        return AuditReport(
            valid=first_invalid is None,
            first_invalid_index=first_invalid,
            learning=learning,
            predictions=predictions,
            registered_records=registered,
        )

    def benchmark(self, challenge_id: str):
        return self.orchestrator.benchmark(challenge_id)

    # -- corrections ------------------------------------------------------------------

    def decrypt_record(self, record_id: str) -> Dataset:
        """Local decryption of an owned record, for display and review."""
        key = self.vault.record_keys.get(record_id)
        if key is None:
            raise NotOwner(f"vault holds no key for {record_id[:12]}")
        blob = self.storage.get_blob(record_id)
        return parse_csv(decrypt_blob(key, blob.sealed).decode("utf-8"))

    def submit_correction(self, correction: AnnotationCorrection) -> str:
        """Turn one reviewed row into a fresh single-row training record.

        The original blob stays immutable; the corrected row re-enters the
        platform as new registered data owned by the annotator.
        """
        if correction.annotator != self.vault.account_id:
            raise NotOwner("annotator does not match this vault")
        if not self.vault.owns(correction.source_record_id):
            raise NotOwner(f"vault holds no key for {correction.source_record_id[:12]}")
        meta = self.vault.record_meta.get(correction.source_record_id, {})
        challenge_id = meta.get("challenge_id")
        spec = self.orchestrator.challenge_info(challenge_id)
        if correction.corrected_label not in spec.label_set:
            raise BadLabel(f"{correction.corrected_label!r} not in challenge label set")
        dataset = self.decrypt_record(correction.source_record_id)
        if not (0 <= correction.row_index < len(dataset)):
            raise IndexOutOfRange(
                f"row {correction.row_index} outside 0..{len(dataset) - 1}"
            )
        corrected = Dataset(
            features=dataset.features[correction.row_index : correction.row_index + 1].copy(),
            labels=[correction.corrected_label],
            columns=list(dataset.columns),
        )
        return self.upload_data(to_csv(corrected), challenge_id)
