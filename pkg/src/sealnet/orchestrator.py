"""The certifying authority: registers records, maintains the task queue and
benchmark table, assigns workers, records results, settles prediction fees,
and authorizes key release.

Every state change flows through a ledger event and is applied by the same
fold used for replay, so rebuilding the orchestrator from its chain (plus
configuration: challenges, account registrations) reproduces the task queue,
benchmark table, balances, and contributivity vectors exactly.

Scheduling policy: learn tasks go to the top-K algorithms by best benchmark
performance; algorithms that have never been evaluated are always included
until they have one evaluation. Prediction tasks are served before learn
tasks. All ties break on ascending hex blob id.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from . import valuation
from .canon import canonical_json, sha256_hex
from .cryptobox import Identity
from .errors import SealnetError
from .ledger import (
    Block,
    DataRegistered,
    Event,
    Ledger,
    PaymentRecorded,
    PerformanceRecorded,
    PredictionRecorded,
    TaskCreated,
    TaskRequeued,
    WorkerAssigned,
    verify_chain,
)
from .valuation import (
    Accounts,
    ContributivityVector,
    InsufficientBalance,
    NoModelAvailable,
    compute_contributivity,
)

DEFAULT_TOP_K = 3
ESCROW_ACCOUNT = "escrow"

STATUS_QUEUED = "queued"
STATUS_ASSIGNED = "assigned"
STATUS_DONE = "done"


class UnknownBlob(SealnetError):
    pass


class UnknownChallenge(SealnetError):
    pass


class DuplicateRegistration(SealnetError):
    pass


class NoWork(SealnetError):
    pass


class WrongWorker(SealnetError):
    pass


class TaskNotAssigned(SealnetError):
    pass


class InvalidPerformance(SealnetError):
    pass


class UnknownAccount(SealnetError):
    pass


@dataclass(frozen=True)
class ChallengeSpec:
    """A named supervised problem: label set plus held-out validation data.

    Validation records are referenced here and never scheduled as training
    data; they are what `performance` means."""

    challenge_id: str
    description: str
    label_set: tuple[str, ...]
    validation_data_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "challenge_id": self.challenge_id,
            "description": self.description,
            "label_set": list(self.label_set),
            "validation_data_ids": list(self.validation_data_ids),
        }


@dataclass
class BenchmarkRow:
    algorithm_id: str
    best_model_id: str
    best_performance: float
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "algorithm_id": self.algorithm_id,
            "best_model_id": self.best_model_id,
            "best_performance": self.best_performance,
            "evaluations": self.evaluations,
        }


@dataclass
class Task:
    task_id: str
    kind: str
    data_ids: tuple[str, ...]
    algorithm_or_model_id: str
    challenge_id: str
    status: str = STATUS_QUEUED
    requester: str | None = None
    payment: int | None = None
    shadow: bool = False
    basis_task_id: str | None = None
    assigned_worker: bytes | None = None
    enqueue_seq: int = 0
    requeues: int = 0
    result_model_id: str | None = None
    performance: float | None = None
    sealed_output_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "data_ids": list(self.data_ids),
            "algorithm_or_model_id": self.algorithm_or_model_id,
            "challenge_id": self.challenge_id,
            "status": self.status,
            "requester": self.requester,
            "payment": self.payment,
            "shadow": self.shadow,
            "basis_task_id": self.basis_task_id,
            "assigned_worker": self.assigned_worker.hex() if self.assigned_worker else None,
            "requeues": self.requeues,
            "performance": self.performance,
            "result_model_id": self.result_model_id,
            "sealed_output_id": self.sealed_output_id,
        }


@dataclass(frozen=True)
class Assignment:
    """What a worker needs to run one task."""

    task: Task
    validation_data_ids: tuple[str, ...]
    custodian_ids: tuple[str, ...]
    requester_seal_pubkey: bytes | None = None


@dataclass
class _RecordInfo:
    owner_id: str
    kind: str
    challenge_id: str


@dataclass
class _LooSuite:
    """Bookkeeping for one contributivity round."""

    challenge_id: str
    full_task_id: str
    full_data_ids: tuple[str, ...]
    loo_tasks: dict[str, str] = field(default_factory=dict)  # task_id -> omitted datum
    results: dict[str, float] = field(default_factory=dict)  # task_id -> performance

    def complete(self) -> bool:
        wanted = {self.full_task_id, *self.loo_tasks}
        return wanted <= set(self.results)


class Orchestrator:
    """Single-writer platform authority.

    All mutating operations validate, append one or more events, and let the
    shared event fold update state. `replay` runs the same fold over an
    existing chain.
    """

    def __init__(
        self,
        signer: Identity | None,
        *,
        clock: Callable[[], int],
        storage_has_blob: Callable[[str], bool] | None = None,
        custodian_ids: Sequence[str] = (),
        top_k: int = DEFAULT_TOP_K,
        fee_rate: float = valuation.DEFAULT_FEE_RATE,
        algorithm_rate: float = valuation.DEFAULT_ALGORITHM_RATE,
        infra_account: str = "infra",
    ):
        self.ledger = Ledger(signer)
        self._clock = clock
        self._has_blob = storage_has_blob
        self.custodian_ids = tuple(custodian_ids)
        self.top_k = top_k
        self.fee_rate = fee_rate
        self.algorithm_rate = algorithm_rate
        self.infra_account = infra_account

        self.challenges: dict[str, ChallengeSpec] = {}
        self.records: dict[str, _RecordInfo] = {}
        self.tasks: dict[str, Task] = {}
        self.accounts = Accounts()
        self.directory: dict[str, bytes] = {}  # account -> seal public key
        self.initial_balances: dict[str, int] = {}
        self.benchmarks: dict[str, dict[str, BenchmarkRow]] = {}
        self.vectors: dict[str, ContributivityVector] = {}
        self.excluded: dict[str, set[str]] = {}
        self._suites: dict[str, _LooSuite] = {}
        self._model_origin: dict[str, str] = {}  # model blob -> producing task
        self._task_seq = 0

        self.accounts.ensure(self.infra_account, 0)
        self.accounts.ensure(ESCROW_ACCOUNT, 0)

    # -- configuration-level setup (not chain events) -------------------------

    @property
    def public_key(self) -> bytes:
        key = self.ledger.signer_public_key
        if key is None:
            raise SealnetError("orchestrator has no signing identity")
        return key

    def create_challenge(
        self,
        challenge_id: str,
        label_set: Sequence[str],
        validation_data_ids: Sequence[str],
        description: str = "",
    ) -> ChallengeSpec:
        if challenge_id in self.challenges:
            raise DuplicateRegistration(f"challenge {challenge_id} exists")
        if not validation_data_ids:
            raise ValueError("a challenge needs held-out validation data")
        spec = ChallengeSpec(
            challenge_id=challenge_id,
            description=description,
            label_set=tuple(label_set),
            validation_data_ids=tuple(validation_data_ids),
        )
        self.challenges[challenge_id] = spec
        return spec

    def register_account(self, account_id: str, seal_pubkey: bytes, balance: int = 0) -> None:
        if account_id in self.directory:
            raise DuplicateRegistration(f"account {account_id} exists")
        self.directory[account_id] = bytes(seal_pubkey)
        self.accounts.ensure(account_id, balance)
        self.initial_balances[account_id] = balance

    def challenge_info(self, challenge_id: str) -> ChallengeSpec:
        spec = self.challenges.get(challenge_id)
        if spec is None:
            raise UnknownChallenge(f"no challenge {challenge_id}")
        return spec

    # -- event plumbing --------------------------------------------------------

    def _append(self, event: Event) -> Block:
        block = self.ledger.append_event(event, self._clock())
        self._apply(event, block.index)
        return block

    def _next_task_id(self) -> str:
        self._task_seq += 1
        return f"task-{self._task_seq:05d}"

    # -- registration and scheduling -------------------------------------------

    def register_data(
        self, owner: str, record_id: str, kind: str, challenge_id: str
    ) -> list[Task]:
        """Register a stored record and schedule whatever training follows."""
        if kind not in ("raw-data", "algorithm", "model"):
            raise ValueError(f"unknown record kind {kind!r}")
        if challenge_id not in self.challenges:
            raise UnknownChallenge(f"no challenge {challenge_id}")
        if record_id in self.records:
            raise DuplicateRegistration(f"record {record_id[:12]} already registered")
        if self._has_blob is not None and not self._has_blob(record_id):
            raise UnknownBlob(f"record {record_id[:12]} is not in storage")

        self._append(
            DataRegistered(record_id=record_id, owner_id=owner, kind=kind, challenge_id=challenge_id)
        )
        if kind == "raw-data":
            return self.schedule_on_new_data(challenge_id, record_id)
        if kind == "algorithm":
            # A fresh algorithm re-opens the challenge: usefulness is
            # algorithm-relative, so previously excluded data rejoin.
            self.excluded[challenge_id] = set()
            data = self._eligible_data(challenge_id)
            if not data:
                return []
            return [self._create_task("learn", data, record_id, challenge_id)]
        return []

    def _eligible_data(self, challenge_id: str) -> tuple[str, ...]:
        banned = self.excluded.get(challenge_id, set())
        return tuple(
            sorted(
                rid
                for rid, info in self.records.items()
                if info.kind == "raw-data" and info.challenge_id == challenge_id and rid not in banned
            )
        )

    def _algorithms_for(self, challenge_id: str) -> list[str]:
        return sorted(
            rid
            for rid, info in self.records.items()
            if info.kind == "algorithm" and info.challenge_id == challenge_id
        )

    def _top_algorithms(self, challenge_id: str) -> list[str]:
        """Top-K evaluated algorithms plus every never-evaluated one."""
        rows = self.benchmarks.get(challenge_id, {})
        algos = self._algorithms_for(challenge_id)
        evaluated = [a for a in algos if rows.get(a) and rows[a].evaluations > 0]
        cold = [a for a in algos if a not in evaluated]
        evaluated.sort(key=lambda a: (-rows[a].best_performance, a))
        return sorted(set(evaluated[: self.top_k]) | set(cold))

    def schedule_on_new_data(self, challenge_id: str, new_data_id: str) -> list[Task]:
        """Feed fresh data to the few best algorithms (plus cold starters).

        The triggering datum must already be registered; the scheduled tasks
        train over every eligible datum of the challenge, which includes it.
        """
        if challenge_id not in self.challenges:
            raise UnknownChallenge(f"no challenge {challenge_id}")
        info = self.records.get(new_data_id)
        if info is None or info.kind != "raw-data" or info.challenge_id != challenge_id:
            raise UnknownBlob(f"{new_data_id[:12]} is not registered data for {challenge_id}")
        data = self._eligible_data(challenge_id)
        tasks = []
        for algorithm_id in self._top_algorithms(challenge_id):
            tasks.append(self._create_task("learn", data, algorithm_id, challenge_id))
        return tasks

    def _create_task(
        self,
        kind: str,
        data_ids: Sequence[str],
        algorithm_or_model_id: str,
        challenge_id: str,
        *,
        requester: str | None = None,
        payment: int | None = None,
        shadow: bool = False,
        basis_task_id: str | None = None,
    ) -> Task:
        task_id = self._next_task_id()
        self._append(
            TaskCreated(
                task_id=task_id,
                kind=kind,
                data_ids=tuple(data_ids),
                algorithm_or_model_id=algorithm_or_model_id,
                challenge_id=challenge_id,
                requester=requester,
                payment=payment,
                shadow=shadow,
                basis_task_id=basis_task_id,
            )
        )
        return self.tasks[task_id]

    def create_shadow_learn_task(
        self, challenge_id: str, algorithm_id: str, data_ids: Sequence[str], basis_task_id: str | None
    ) -> Task:
        return self._create_task(
            "learn",
            data_ids,
            algorithm_id,
            challenge_id,
            shadow=True,
            basis_task_id=basis_task_id,
        )

    def schedule_valuation(self, challenge_id: str) -> list[Task]:
        """Queue the leave-one-out shadow suite for a challenge."""
        self.challenge_info(challenge_id)
        best = self._best_row(challenge_id)
        if best is None:
            raise NoModelAvailable(f"no benchmarked algorithm for {challenge_id}")
        data = self._eligible_data(challenge_id)
        if not data:
            raise ValueError(f"no eligible data to value for {challenge_id}")
        return valuation.orchestrate_loo_jobs(self, challenge_id, best.algorithm_id, data)

    # -- predictions ------------------------------------------------------------

    def _best_row(self, challenge_id: str) -> BenchmarkRow | None:
        rows = [r for r in self.benchmarks.get(challenge_id, {}).values() if r.evaluations > 0]
        if not rows:
            return None
        rows.sort(key=lambda r: (-r.best_performance, r.algorithm_id))
        return rows[0]

    def request_prediction(
        self, requester: str, input_record_id: str, challenge_id: str, payment: int
    ) -> Task:
        """Queue a paid prediction against the current best model.

        The fee moves to escrow now and is split at completion, so a later
        request cannot spend credits this one already committed.
        """
        self.challenge_info(challenge_id)
        if payment <= 0:
            raise ValueError("payment must be positive")
        if requester not in self.directory:
            raise UnknownAccount(f"account {requester} is not registered")
        if self.accounts.balance(requester) < payment:
            raise InsufficientBalance(
                f"{requester} has {self.accounts.balance(requester)}, needs {payment}"
            )
        best = self._best_row(challenge_id)
        if best is None or not best.best_model_id:
            raise NoModelAvailable(f"no trained model for {challenge_id}")
        return self._create_task(
            "predict",
            (input_record_id,),
            best.best_model_id,
            challenge_id,
            requester=requester,
            payment=int(payment),
        )

    # -- worker lifecycle --------------------------------------------------------

    def _queued_in_order(self) -> list[Task]:
        queued = [t for t in self.tasks.values() if t.status == STATUS_QUEUED]
        # Paid, user-facing predictions are served before learn tasks.
        queued.sort(key=lambda t: (0 if t.kind == "predict" else 1, t.enqueue_seq))
        return queued

    def next_task(self, worker_pubkey: bytes) -> Assignment:
        queued = self._queued_in_order()
        if not queued:
            raise NoWork("task queue is empty")
        task = queued[0]
        self._append(WorkerAssigned(task_id=task.task_id, worker_pubkey=bytes(worker_pubkey)))
        spec = self.challenges[task.challenge_id]
        seal_key = None
        if task.kind == "predict" and task.requester is not None:
            seal_key = self.directory.get(task.requester)
        return Assignment(
            task=replace(task),
            validation_data_ids=spec.validation_data_ids,
            custodian_ids=self.custodian_ids,
            requester_seal_pubkey=seal_key,
        )

    def requeue_task(self, task_id: str, worker_pubkey: bytes) -> None:
        """Return a dead worker's task to the queue (once per death)."""
        task = self.tasks.get(task_id)
        if task is None or task.status != STATUS_ASSIGNED:
            raise TaskNotAssigned(f"task {task_id} is not assigned")
        if task.assigned_worker != bytes(worker_pubkey):
            raise WrongWorker("task is assigned to a different worker")
        self._append(TaskRequeued(task_id=task_id, worker_pubkey=bytes(worker_pubkey)))

    def record_result(
        self,
        task_id: str,
        worker_pubkey: bytes,
        *,
        performance: float | None = None,
        model_id: str | None = None,
        sealed_output_id: str | None = None,
    ) -> None:
        task = self.tasks.get(task_id)
        if task is None or task.status == STATUS_QUEUED:
            raise TaskNotAssigned(f"task {task_id} is not assigned")
        if task.status == STATUS_DONE:
            raise TaskNotAssigned(f"task {task_id} is already done")
        if task.assigned_worker != bytes(worker_pubkey):
            raise WrongWorker("result reported by a worker not assigned to the task")
        if task.kind == "learn":
            if performance is None or model_id is None:
                raise ValueError("learn results carry performance and model_id")
            if not (0.0 <= float(performance) <= 1.0):
                raise InvalidPerformance(f"performance {performance} outside [0, 1]")
            self._append(
                PerformanceRecorded(
                    task_id=task_id, model_id=model_id, performance=float(performance)
                )
            )
        else:
            if sealed_output_id is None:
                raise ValueError("predict results carry sealed_output_id")
            self._append(
                PredictionRecorded(
                    task_id=task_id,
                    model_id=task.algorithm_or_model_id,
                    sealed_output_id=sealed_output_id,
                )
            )
            self._settle_prediction(task)

    def _settle_prediction(self, task: Task) -> None:
        if task.requester is None or task.payment is None:
            return
        vector = self.vectors.get(task.challenge_id)
        if vector is None or not vector.entries:
            # No contributivity round has completed yet: fall back to a
            # uniform split over the data that trained the serving model.
            origin = self._model_origin.get(task.algorithm_or_model_id)
            data_ids = self.tasks[origin].data_ids if origin else ()
            if not data_ids:
                return
            n = len(data_ids)
            vector = ContributivityVector(
                challenge_id=task.challenge_id,
                entries=tuple((d, 1.0 / n) for d in sorted(data_ids)),
                basis_performance=0.0,
            )
        best = self._best_row(task.challenge_id)
        algorithm_owner = self.records[best.algorithm_id].owner_id if best else self.infra_account
        owner_of = {d: self.records[d].owner_id for d, _ in vector.entries}
        split = valuation.split_payment(
            task.payment,
            vector,
            owner_of,
            algorithm_owner,
            fee_rate=self.fee_rate,
            infra_account=self.infra_account,
            algorithm_rate=self.algorithm_rate,
        )
        self._append(PaymentRecorded(payer=task.requester, splits=tuple(split.recipients())))

    # -- views ---------------------------------------------------------------------

    def authorize_key_release(self, task_id: str, worker_pubkey: bytes, record_id: str) -> bool:
        """True only while the task is assigned to this worker and the record
        is among the task's data, its algorithm/model, or the challenge's
        validation set. Purpose limitation, as a pure verdict."""
        task = self.tasks.get(task_id)
        if task is None or task.status != STATUS_ASSIGNED:
            return False
        if task.assigned_worker != bytes(worker_pubkey):
            return False
        spec = self.challenges.get(task.challenge_id)
        referenced = set(task.data_ids) | {task.algorithm_or_model_id}
        if spec is not None:
            referenced |= set(spec.validation_data_ids)
        return record_id in referenced

    def benchmark(self, challenge_id: str) -> list[BenchmarkRow]:
        self.challenge_info(challenge_id)
        rows = [r for r in self.benchmarks.get(challenge_id, {}).values() if r.evaluations > 0]
        rows.sort(key=lambda r: (-r.best_performance, r.algorithm_id))
        return [replace(r) for r in rows]

    def contributivity(self, challenge_id: str) -> ContributivityVector | None:
        self.challenge_info(challenge_id)
        return self.vectors.get(challenge_id)

    def chain_blocks(self) -> list[Block]:
        return self.ledger.blocks

    def task(self, task_id: str) -> Task | None:
        t = self.tasks.get(task_id)
        return replace(t) if t else None

    def queued_count(self) -> int:
        return len(self._queued_in_order())

    def ledger_view_for(self, node_id: str):
        """The view custodians consult before releasing shares."""
        return _CustodianLedgerView(self)

    # -- event fold -------------------------------------------------------------

    def _apply(self, event: Event, seq: int) -> None:
        if isinstance(event, DataRegistered):
            self.records[event.record_id] = _RecordInfo(
                owner_id=event.owner_id, kind=event.kind, challenge_id=event.challenge_id
            )
        elif isinstance(event, TaskCreated):
            task = Task(
                task_id=event.task_id,
                kind=event.kind,
                data_ids=event.data_ids,
                algorithm_or_model_id=event.algorithm_or_model_id,
                challenge_id=event.challenge_id,
                requester=event.requester,
                payment=event.payment,
                shadow=event.shadow,
                basis_task_id=event.basis_task_id,
                enqueue_seq=seq,
            )
            self.tasks[event.task_id] = task
            num = int(event.task_id.rsplit("-", 1)[-1]) if "-" in event.task_id else 0
            self._task_seq = max(self._task_seq, num)
            if event.payment is not None and event.requester is not None:
                self.accounts.debit(event.requester, event.payment)
                self.accounts.credit(ESCROW_ACCOUNT, event.payment)
            if event.shadow:
                if event.basis_task_id is None:
                    self._suites[event.task_id] = _LooSuite(
                        challenge_id=event.challenge_id,
                        full_task_id=event.task_id,
                        full_data_ids=event.data_ids,
                    )
                else:
                    suite = self._suites.get(event.basis_task_id)
                    if suite is not None:
                        omitted = set(suite.full_data_ids) - set(event.data_ids)
                        if len(omitted) == 1:
                            suite.loo_tasks[event.task_id] = omitted.pop()
        elif isinstance(event, WorkerAssigned):
            task = self.tasks[event.task_id]
            task.status = STATUS_ASSIGNED
            task.assigned_worker = event.worker_pubkey
        elif isinstance(event, TaskRequeued):
            task = self.tasks[event.task_id]
            task.status = STATUS_QUEUED
            task.assigned_worker = None
            task.enqueue_seq = seq
            task.requeues += 1
        elif isinstance(event, PerformanceRecorded):
            task = self.tasks[event.task_id]
            task.status = STATUS_DONE
            task.performance = event.performance
            task.result_model_id = event.model_id
            if event.model_id:
                self._model_origin[event.model_id] = event.task_id
            if task.shadow:
                self._apply_shadow_result(task, event)
            else:
                rows = self.benchmarks.setdefault(task.challenge_id, {})
                row = rows.get(task.algorithm_or_model_id)
                if row is None:
                    row = BenchmarkRow(
                        algorithm_id=task.algorithm_or_model_id,
                        best_model_id=event.model_id,
                        best_performance=event.performance,
                        evaluations=0,
                    )
                    rows[task.algorithm_or_model_id] = row
                elif event.performance > row.best_performance:
                    row.best_performance = event.performance
                    row.best_model_id = event.model_id
                row.evaluations += 1
        elif isinstance(event, PredictionRecorded):
            task = self.tasks[event.task_id]
            task.status = STATUS_DONE
            task.sealed_output_id = event.sealed_output_id
        elif isinstance(event, PaymentRecorded):
            total = sum(n for _, n in event.splits)
            self.accounts.debit(ESCROW_ACCOUNT, total)
            for account_id, amount in event.splits:
                self.accounts.credit(account_id, amount)

    def _apply_shadow_result(self, task: Task, event: PerformanceRecorded) -> None:
        suite_id = task.basis_task_id or task.task_id
        suite = self._suites.get(suite_id)
        if suite is None:
            return
        suite.results[task.task_id] = event.performance
        if not suite.complete():
            return
        perf_without = {
            omitted: suite.results[tid] for tid, omitted in suite.loo_tasks.items()
        }
        vector = compute_contributivity(
            suite.challenge_id,
            list(suite.full_data_ids),
            suite.results[suite.full_task_id],
            perf_without,
        )
        self.vectors[suite.challenge_id] = vector
        # Zero-scored data drop out of future scheduled training for this
        # challenge until a new algorithm arrives.
        self.excluded[suite.challenge_id] = {d for d, s in vector.entries if s == 0.0}

    # -- replay -----------------------------------------------------------------

    @classmethod
    def replay(
        cls,
        blocks: Sequence[Block],
        *,
        challenges: dict[str, ChallengeSpec],
        directory: dict[str, bytes],
        initial_balances: dict[str, int],
        orchestrator_pubkey: bytes | None = None,
        custodian_ids: Sequence[str] = (),
        top_k: int = DEFAULT_TOP_K,
        fee_rate: float = valuation.DEFAULT_FEE_RATE,
        algorithm_rate: float = valuation.DEFAULT_ALGORITHM_RATE,
        infra_account: str = "infra",
    ) -> "Orchestrator":
        """Rebuild state by folding an existing chain.

        Raises if the chain does not verify (when a public key is supplied).
        The result has no signing identity and therefore cannot append.
        """
        if orchestrator_pubkey is not None:
            bad = verify_chain(blocks, orchestrator_pubkey)
            if bad is not None:
                raise SealnetError(f"chain invalid at index {bad}")
        orch = cls(
            None,
            clock=lambda: 0,
            custodian_ids=custodian_ids,
            top_k=top_k,
            fee_rate=fee_rate,
            algorithm_rate=algorithm_rate,
            infra_account=infra_account,
        )
        orch.challenges = dict(challenges)
        for account_id, balance in initial_balances.items():
            orch.directory[account_id] = directory.get(account_id, b"")
            orch.accounts.ensure(account_id, balance)
            orch.initial_balances[account_id] = balance
        orch.ledger = Ledger(None, blocks=list(blocks))
        for block in blocks:
            orch._apply(block.event, block.index)
        return orch

    def state_summary(self) -> dict:
        """Deterministic snapshot used for replay-equivalence checks."""
        return {
            "tasks": {tid: t.to_dict() for tid, t in sorted(self.tasks.items())},
            "queue": [t.task_id for t in self._queued_in_order()],
            "benchmarks": {
                cid: {aid: row.to_dict() for aid, row in sorted(rows.items())}
                for cid, rows in sorted(self.benchmarks.items())
            },
            "balances": dict(sorted(self.accounts.as_dict().items())),
            "vectors": {cid: v.to_dict() for cid, v in sorted(self.vectors.items())},
            "excluded": {cid: sorted(v) for cid, v in sorted(self.excluded.items()) if v},
            "records": {
                rid: [info.owner_id, info.kind, info.challenge_id]
                for rid, info in sorted(self.records.items())
            },
        }

    def state_digest(self) -> str:
        return sha256_hex(canonical_json(self.state_summary()))

    # -- HTTP-style interface -----------------------------------------------------

    def route(self, method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
        """POST /data, /algorithms, /predictions, /tasks/next,
        /tasks/{id}/result; GET /benchmark/{challenge}, /contributivity/{challenge},
        /accounts/{id}, /authorize, /chain."""
        body = body or {}
        try:
            if method == "POST" and path in ("/data", "/algorithms"):
                kind = "raw-data" if path == "/data" else "algorithm"
                tasks = self.register_data(
                    body["owner"], body["record_id"], kind, body["challenge_id"]
                )
                return 200, {"tasks": [t.task_id for t in tasks]}
            if method == "POST" and path == "/predictions":
                task = self.request_prediction(
                    body["requester"],
                    body["input_record_id"],
                    body["challenge_id"],
                    int(body["payment"]),
                )
                return 200, {"task_id": task.task_id}
            if method == "POST" and path == "/tasks/next":
                assignment = self.next_task(bytes.fromhex(body["worker_pubkey"]))
                return 200, {
                    "task": assignment.task.to_dict(),
                    "validation_data_ids": list(assignment.validation_data_ids),
                    "custodian_ids": list(assignment.custodian_ids),
                    "requester_seal_pubkey": (
                        assignment.requester_seal_pubkey.hex()
                        if assignment.requester_seal_pubkey
                        else None
                    ),
                }
            if method == "POST" and path.startswith("/tasks/") and path.endswith("/result"):
                task_id = path[len("/tasks/") : -len("/result")]
                self.record_result(
                    task_id,
                    bytes.fromhex(body["worker_pubkey"]),
                    performance=body.get("performance"),
                    model_id=body.get("model_id"),
                    sealed_output_id=body.get("sealed_output_id"),
                )
                return 200, {"ok": True}
            if method == "GET" and path.startswith("/benchmark/"):
                rows = self.benchmark(path[len("/benchmark/") :])
                return 200, {"rows": [r.to_dict() for r in rows]}
            if method == "GET" and path.startswith("/contributivity/"):
                challenge_id = path[len("/contributivity/") :]
                vector = self.contributivity(challenge_id)
                if vector is None:
                    return 200, {"challenge_id": challenge_id, "entries": [], "basis_performance": None}
                return 200, vector.to_dict()
            if method == "GET" and path.startswith("/accounts/"):
                account_id = path[len("/accounts/") :]
                return 200, {"account_id": account_id, "balance": self.accounts.balance(account_id)}
            if method == "GET" and path == "/authorize":
                ok = self.authorize_key_release(
                    body["task_id"], bytes.fromhex(body["worker_pubkey"]), body["record_id"]
                )
                return 200, {"authorized": ok}
            if method == "GET" and path == "/chain":
                return 200, {"blocks": [b.to_dict() for b in self.ledger.blocks]}
        except SealnetError as exc:
            return 409, {"error": type(exc).__name__, "detail": str(exc)}
        except (KeyError, ValueError) as exc:
            return 400, {"error": type(exc).__name__, "detail": str(exc)}
        return 404, {"error": f"no route {method} {path}"}


class _CustodianLedgerView:
    """What a custodian may learn from the orchestrator: who is assigned a
    task, and whether the task references a record."""

    def __init__(self, orch: Orchestrator):
        self._orch = orch

    def worker_for_task(self, task_id: str) -> bytes | None:
        task = self._orch.tasks.get(task_id)
        if task is None or task.status != STATUS_ASSIGNED:
            return None
        return task.assigned_worker

    def task_references(self, task_id: str, record_id: str) -> bool:
        worker = self.worker_for_task(task_id)
        if worker is None:
            return False
        return self._orch.authorize_key_release(task_id, worker, record_id)
