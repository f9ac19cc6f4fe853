"""Ephemeral workers.

A worker is born with a fresh keypair, gets one task, pulls the encrypted
records it references, collects every key share through signed challenges,
computes entirely offline, reports its result, then destroys itself: scratch
zeroed, keys dropped. Phases move strictly forward:

    created -> provisioned -> isolated-running -> reporting -> destroyed

The simulation harness counts network messages per phase: the count during
isolated-running must be zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .. import cryptobox
from ..canon import canonical_json
from ..cryptobox import (
    AuthenticationFailed,
    AuthorizationDenied,
    Identity,
    MissingShares,
    Rng,
    distribute_key,
    encrypt_blob,
    generate_key,
    request_key,
    seal_for_recipient,
)
from ..errors import SealnetError, TransportError
from .dataset import Dataset, concat_datasets, parse_csv
from .trainers import EmptyDataset, Model, evaluate, parse_trainer_spec, predict, train

PHASE_CREATED = "created"
PHASE_PROVISIONED = "provisioned"
PHASE_ISOLATED = "isolated-running"
PHASE_REPORTING = "reporting"
PHASE_DESTROYED = "destroyed"

_PHASE_ORDER = [PHASE_CREATED, PHASE_PROVISIONED, PHASE_ISOLATED, PHASE_REPORTING, PHASE_DESTROYED]


class ReportRejected(SealnetError):
    pass


class CustodianUnavailable(SealnetError):
    pass


class WorkerKilled(SealnetError):
    """Raised by a fault-injection checkpoint to simulate worker death."""


@dataclass
class WorkerRunError(SealnetError):
    """A task attempt failed after assignment; carries what is needed to
    requeue."""

    task_id: str
    worker_pubkey: bytes
    cause: Exception

    def __str__(self) -> str:
        return f"task {self.task_id} failed: {self.cause}"


@dataclass
class WorkerState:
    identity: Identity
    phase: str = PHASE_CREATED
    # record_id -> decrypted payload; exists only between provision and report.
    scratch: dict[str, bytearray] = field(default_factory=dict)

    @property
    def public_key(self) -> bytes:
        return self.identity.public_key

    def advance(self, phase: str) -> None:
        if _PHASE_ORDER.index(phase) < _PHASE_ORDER.index(self.phase):
            raise SealnetError(f"phase may not move backwards: {self.phase} -> {phase}")
        self.phase = phase


def spawn_worker(rng: Rng) -> WorkerState:
    return WorkerState(identity=Identity.generate(rng))


def destroy(worker: WorkerState) -> None:
    """Zero and drop every scratch buffer; the worker keeps nothing."""
    for buf in worker.scratch.values():
        for i in range(len(buf)):
            buf[i] = 0
        del buf[:]
    worker.scratch.clear()
    worker.phase = PHASE_DESTROYED


def provision(worker: WorkerState, assignment, storage_view, custodians: Sequence, ledger_view) -> WorkerState:
    """Fetch and decrypt every record the task references.

    Each record needs its blob from storage plus all n key shares, each
    released only after this worker signs that node's challenge. Keys are
    reconstructed, used, and forgotten; only plaintext lands in scratch.
    """
    task = assignment.task
    needed = list(task.data_ids) + [task.algorithm_or_model_id]
    if task.kind == "learn":
        needed += list(assignment.validation_data_ids)
    try:
        for record_id in needed:
            if record_id in worker.scratch:
                continue
            blob = storage_view.get_blob(record_id)
            key = request_key(worker.identity, task.task_id, record_id, custodians, ledger_view)
            plaintext = cryptobox.decrypt_blob(key, blob.sealed)
            worker.scratch[record_id] = bytearray(plaintext)
    except TransportError as exc:
        raise MissingShares(f"provisioning interrupted: {exc}") from exc
    worker.advance(PHASE_PROVISIONED)
    return worker


@dataclass
class LearnOutcome:
    performance: float
    model: Model | None  # None when the training set was empty


@dataclass
class PredictOutcome:
    labels: list[str]


def execute(worker: WorkerState, assignment) -> LearnOutcome | PredictOutcome:
    """Run the task on scratch only. No collaborator may be contacted here."""
    worker.advance(PHASE_ISOLATED)
    task = assignment.task
    if task.kind == "learn":
        spec = parse_trainer_spec(bytes(worker.scratch[task.algorithm_or_model_id]))
        datasets = [parse_csv(bytes(worker.scratch[d]).decode("utf-8")) for d in task.data_ids]
        validation = concat_datasets(
            [parse_csv(bytes(worker.scratch[v]).decode("utf-8")) for v in assignment.validation_data_ids]
        )
        try:
            training = concat_datasets(datasets)
        except EmptyDataset:
            # Leave-one-out over a single datum trains on nothing; that run
            # scores zero by decree rather than failing the suite.
            return LearnOutcome(performance=0.0, model=None)
        model = train(training, spec)
        model.algorithm_id = task.algorithm_or_model_id
        model.trained_on = tuple(task.data_ids)
        return LearnOutcome(performance=evaluate(model, validation), model=model)

    model = Model.from_dict(json.loads(bytes(worker.scratch[task.algorithm_or_model_id])))
    inputs = parse_csv(bytes(worker.scratch[task.data_ids[0]]).decode("utf-8"))
    labels = [predict(model, inputs.features[i]) for i in range(len(inputs))]
    return PredictOutcome(labels=labels)


def report_and_destroy(
    worker: WorkerState,
    assignment,
    outcome: LearnOutcome | PredictOutcome,
    orchestrator_view,
    storage_view,
    custodians: Sequence,
    rng: Rng,
) -> str | None:
    """Publish the result, then self-destruct.

    Learn: the new model is encrypted under a fresh key, the key is split to
    the custodians, the blob stored, and the performance reported. Predict:
    the output is sealed to the requester and stored. Either way the worker
    ends with empty scratch and no keys.
    """
    task = assignment.task
    result_id: str | None = None
    try:
        worker.advance(PHASE_REPORTING)
        if isinstance(outcome, LearnOutcome):
            model_id = ""
            if outcome.model is not None:
                key = generate_key(rng)
                sealed = encrypt_blob(key, outcome.model.canonical(), rng)
                try:
                    model_id = storage_view.put_blob(sealed, "model")
                    distribute_key(key, model_id, custodians, rng)
                except TransportError as exc:
                    raise CustodianUnavailable(str(exc)) from exc
            try:
                orchestrator_view.record_result(
                    task.task_id,
                    worker.public_key,
                    performance=outcome.performance,
                    model_id=model_id,
                )
            except SealnetError as exc:
                raise ReportRejected(str(exc)) from exc
            result_id = model_id
        else:
            if assignment.requester_seal_pubkey is None:
                raise ReportRejected("no requester key to seal the prediction to")
            payload = canonical_json({"task_id": task.task_id, "labels": outcome.labels})
            envelope = seal_for_recipient(assignment.requester_seal_pubkey, payload, rng)
            try:
                output_id = storage_view.put_blob(envelope, "prediction")
            except TransportError as exc:
                raise CustodianUnavailable(str(exc)) from exc
            try:
                orchestrator_view.record_result(
                    task.task_id, worker.public_key, sealed_output_id=output_id
                )
            except SealnetError as exc:
                raise ReportRejected(str(exc)) from exc
            result_id = output_id
    finally:
        destroy(worker)
    return result_id


def run_task(
    worker: WorkerState,
    orchestrator_view,
    storage_view,
    custodians: Sequence,
    ledger_view,
    rng: Rng,
    checkpoint: Callable[[str], None] | None = None,
) -> str:
    """Consume exactly one task end to end; returns the task id.

    checkpoint(phase) is a fault-injection hook; it may raise WorkerKilled.
    Failures after assignment surface as WorkerRunError so the caller can
    requeue; the worker is destroyed regardless.
    """

    def _checkpoint(phase: str) -> None:
        if checkpoint is not None:
            checkpoint(phase)

    assignment = orchestrator_view.next_task(worker.public_key)
    task_id = assignment.task.task_id
    try:
        _checkpoint(PHASE_CREATED)
        provision(worker, assignment, storage_view, custodians, ledger_view)
        _checkpoint(PHASE_PROVISIONED)
        outcome = execute(worker, assignment)
        _checkpoint(PHASE_ISOLATED)
        report_and_destroy(
            worker, assignment, outcome, orchestrator_view, storage_view, custodians, rng
        )
    except (SealnetError, TransportError) as exc:
        raise WorkerRunError(task_id=task_id, worker_pubkey=worker.public_key, cause=exc) from exc
    finally:
        # Self-destruction is unconditional, whatever went wrong above.
        if worker.phase != PHASE_DESTROYED:
            destroy(worker)
    return task_id
