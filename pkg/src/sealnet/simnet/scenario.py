"""Scripted, seeded simulations of the whole platform.

A scenario is an ordered list of client actions (create a challenge, upload
data, submit an algorithm, request a prediction, schedule a valuation round)
executed over in-process actors wired through the instrumented network.
After every action, ephemeral workers drain the task queue; a worker death
requeues its task exactly once. Identical configs produce identical traces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .. import cryptobox
from ..client.ops import Client
from ..client.vault import keygen
from ..cryptobox import CustodianNode, Identity, Rng
from ..errors import SealnetError
from ..ledger import verify_chain
from ..orchestrator import NoWork, Orchestrator
from ..storage import BlobStore
from ..compute.worker import WorkerKilled, WorkerRunError, run_task, spawn_worker
from .net import (
    LEDGER_VIEW_OPS,
    ORCHESTRATOR_OPS,
    STORAGE_OPS,
    Fault,
    FaultPlan,
    Remote,
    RemoteCustodian,
    SimNet,
)
from .taint import TaintMap


class ScenarioError(SealnetError):
    pass


class ConflictingFault(SealnetError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int
    custodian_count: int = 3
    worker_count: int = 1000  # spawn budget for the whole run
    top_k: int = 3
    fee_rate: float = 0.1
    faults: tuple[Fault, ...] = ()
    actions: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "custodian_count": self.custodian_count,
            "worker_count": self.worker_count,
            "top_k": self.top_k,
            "fee_rate": self.fee_rate,
            "faults": [f.to_dict() for f in self.faults],
            "actions": list(self.actions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(
            seed=int(d["seed"]),
            custodian_count=int(d.get("custodian_count", 3)),
            worker_count=int(d.get("worker_count", 1000)),
            top_k=int(d.get("top_k", 3)),
            fee_rate=float(d.get("fee_rate", 0.1)),
            faults=tuple(Fault.from_dict(f) for f in d.get("faults", [])),
            actions=tuple(d.get("actions", [])),
        )


def inject_fault(config: SimConfig, fault: Fault | dict) -> SimConfig:
    """Merge one declarative fault into the plan, rejecting contradictions."""
    if isinstance(fault, dict):
        fault = Fault.from_dict(fault)
    for existing in config.faults:
        if existing == fault:
            raise ConflictingFault(f"duplicate fault {fault}")
        if (
            fault.kind == "offline"
            and existing.kind == "offline"
            and existing.actor == fault.actor
            and fault.start < existing.end
            and existing.start < fault.end
        ):
            raise ConflictingFault(f"overlapping offline windows for {fault.actor}")
    return SimConfig(
        seed=config.seed,
        custodian_count=config.custodian_count,
        worker_count=config.worker_count,
        top_k=config.top_k,
        fee_rate=config.fee_rate,
        faults=config.faults + (fault,),
        actions=config.actions,
    )


@dataclass
class PrivacyVerdict:
    valid: bool
    violations: list[dict]

    def to_dict(self) -> dict:
        return {"valid": self.valid, "violations": self.violations}


@dataclass
class SimResult:
    config: SimConfig
    net: SimNet
    orchestrator: Orchestrator
    storage: BlobStore
    custodians: list[CustodianNode]
    clients: dict[str, Client]
    action_outputs: list[dict]
    destroyed_workers: list
    stuck_tasks: list[str]
    chain_first_invalid: int | None
    replay_equal: bool

    @property
    def taint(self) -> TaintMap:
        return self.net.taint

    def trace_digest(self) -> str:
        return self.net.trace_digest()

    def summary(self) -> dict:
        return {
            "seed": self.config.seed,
            "blocks": len(self.orchestrator.chain_blocks()),
            "chain_valid": self.chain_first_invalid is None,
            "replay_equal": self.replay_equal,
            "trace_digest": self.trace_digest(),
            "state_digest": self.orchestrator.state_digest(),
            "stuck_tasks": list(self.stuck_tasks),
            "messages": len(self.net.trace),
        }


def _derived_seed(seed: int, label: str) -> int:
    material = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(material[:8], "big")


class _Runner:
    def __init__(self, config: SimConfig, worker_factory=None, run_task_fn=None):
        self.config = config
        self.net = SimNet(config.seed, FaultPlan(list(config.faults)))
        self.worker_factory = worker_factory or spawn_worker
        self.run_task_fn = run_task_fn or run_task
        self.worker_serial = 0
        self.stuck: list[str] = []
        self.requeued: set[str] = set()
        self.destroyed_workers: list = []
        self.outputs: list[dict] = []

        rng = Rng(_derived_seed(config.seed, "orchestrator-id"))
        self.storage = BlobStore()
        self.custodians = [
            CustodianNode(f"node-{i}", Rng(_derived_seed(config.seed, f"node-{i}")))
            for i in range(config.custodian_count)
        ]
        self.orchestrator = Orchestrator(
            Identity.generate(rng),
            clock=lambda: self.net.clock,
            storage_has_blob=self.storage.has_blob,
            custodian_ids=tuple(n.node_id for n in self.custodians),
            top_k=config.top_k,
            fee_rate=config.fee_rate,
        )
        self.net.register("orchestrator", self.orchestrator)
        self.net.register("storage", self.storage)
        for node in self.custodians:
            self.net.register(node.node_id, node)
        self.clients: dict[str, Client] = {}

    # -- proxy wiring ---------------------------------------------------------

    def _proxies_for(self, actor: str):
        orch = Remote(
            self.net, actor, "orchestrator", self.orchestrator, ORCHESTRATOR_OPS
        )
        store = Remote(self.net, actor, "storage", self.storage, STORAGE_OPS)
        nodes = [
            RemoteCustodian(self.net, actor, n.node_id, n, self._node_view(n.node_id))
            for n in self.custodians
        ]
        return orch, store, nodes

    def _node_view(self, node_id: str):
        # Custodians consult the orchestrator over the network like everyone
        # else; each node verifies through its own proxied view.
        view = self.orchestrator.ledger_view_for(node_id)
        return Remote(self.net, node_id, "orchestrator", view, LEDGER_VIEW_OPS)

    # -- clients ---------------------------------------------------------------

    def _add_client(self, name: str, balance: int) -> Client:
        if name in self.clients:
            raise ScenarioError(f"duplicate client {name}")
        vault = keygen(name, Rng(_derived_seed(self.config.seed, f"client-{name}")))
        orch, store, nodes = self._proxies_for(name)
        client = Client(
            vault,
            orchestrator=_AttrView(orch, self.orchestrator),
            storage=store,
            custodians=nodes,
            rng=Rng(_derived_seed(self.config.seed, f"client-rng-{name}")),
        )
        self.net.register(name, client)
        client.orchestrator.register_account(name, vault.identity.seal_public, balance)
        self.clients[name] = client
        return client

    # -- worker drain -----------------------------------------------------------

    def _drain(self) -> None:
        while self.orchestrator.queued_count() > 0:
            if self.worker_serial >= self.config.worker_count:
                self.stuck.extend(
                    t.task_id
                    for t in self.orchestrator.tasks.values()
                    if t.status == "queued"
                )
                return
            self.worker_serial += 1
            name = f"worker-{self.worker_serial:04d}"
            worker = self.worker_factory(
                Rng(_derived_seed(self.config.seed, f"worker-{self.worker_serial}"))
            )
            self.net.register_worker(name, worker)
            orch, store, nodes = self._proxies_for(name)

            def checkpoint(phase: str) -> None:
                if self.net.faults.should_kill(phase):
                    raise WorkerKilled(f"killed at {phase} by fault plan")

            try:
                self.run_task_fn(
                    worker,
                    orch,
                    store,
                    nodes,
                    None,  # custodian proxies bind their own ledger views
                    Rng(_derived_seed(self.config.seed, f"worker-run-{self.worker_serial}")),
                    checkpoint=checkpoint,
                )
            except NoWork:
                return
            except WorkerRunError as err:
                self._handle_worker_death(err)
            finally:
                self.destroyed_workers.append(worker)

    def _handle_worker_death(self, err: WorkerRunError) -> None:
        task = self.orchestrator.tasks.get(err.task_id)
        if task is None or task.status != "assigned":
            return
        if err.task_id in self.requeued:
            # One free retry per task; after that it stays stuck for diagnosis.
            self.stuck.append(err.task_id)
            return
        self.requeued.add(err.task_id)
        self.orchestrator.requeue_task(err.task_id, err.worker_pubkey)

    # -- actions -----------------------------------------------------------------

    def _client(self, name: str) -> Client:
        client = self.clients.get(name)
        if client is None:
            raise ScenarioError(f"unknown client {name!r}")
        return client

    def run_action(self, action: dict) -> dict:
        kind = action.get("action")
        out: dict = {"action": kind}
        if kind == "client":
            self._add_client(action["name"], int(action.get("balance", 0)))
            out["name"] = action["name"]
        elif kind == "challenge":
            client = self._client(action["client"])
            validation = action.get("validation")
            csvs = validation if isinstance(validation, list) else [validation]
            out["validation_ids"] = client.create_challenge(
                action["id"], action["labels"], csvs, action.get("description", "")
            )
        elif kind == "upload":
            client = self._client(action["client"])
            out["record_id"] = client.upload_data(action["csv"], action["challenge"])
        elif kind == "algorithm":
            client = self._client(action["client"])
            spec = action["spec"]
            text = json.dumps(spec) if isinstance(spec, dict) else spec
            out["record_id"] = client.submit_algorithm(text, action["challenge"])
        elif kind == "predict":
            client = self._client(action["client"])
            out["task_id"] = client.request_prediction(
                action["csv"], action["challenge"], int(action["payment"])
            )
        elif kind == "fetch":
            client = self._client(action["client"])
            task_id = action.get("task") or self._last_task_id(action["client"])
            out["task_id"] = task_id
            out["labels"] = client.fetch_prediction(task_id)
        elif kind == "value":
            client = self._client(action["client"])
            tasks = client.orchestrator.schedule_valuation(action["challenge"])
            out["tasks"] = [t.task_id for t in tasks]
        elif kind == "drain":
            pass  # the shared drain below does the work
        else:
            raise ScenarioError(f"unknown action {kind!r}")
        if action.get("drain", True):
            self._drain()
        return out

    def _last_task_id(self, client_name: str) -> str:
        tasks = self._client(client_name).vault.predict_tasks
        if not tasks:
            raise ScenarioError(f"{client_name} has no prediction tasks")
        return sorted(tasks)[-1]

    def run(self) -> SimResult:
        with _taint_hook(self.net.taint):
            for action in self.config.actions:
                self.outputs.append(self.run_action(action))
        chain = self.orchestrator.chain_blocks()
        first_invalid = verify_chain(chain, self.orchestrator.public_key)
        replay_equal = self._replay_equal(first_invalid is None)
        return SimResult(
            config=self.config,
            net=self.net,
            orchestrator=self.orchestrator,
            storage=self.storage,
            custodians=self.custodians,
            clients=self.clients,
            action_outputs=self.outputs,
            destroyed_workers=self.destroyed_workers,
            stuck_tasks=self.stuck,
            chain_first_invalid=first_invalid,
            replay_equal=replay_equal,
        )

    def _replay_equal(self, chain_valid: bool) -> bool:
        if not chain_valid:
            return False
        replayed = Orchestrator.replay(
            self.orchestrator.chain_blocks(),
            challenges=self.orchestrator.challenges,
            directory=self.orchestrator.directory,
            initial_balances=self.orchestrator.initial_balances,
            custodian_ids=self.orchestrator.custodian_ids,
            top_k=self.orchestrator.top_k,
            fee_rate=self.orchestrator.fee_rate,
        )
        return replayed.state_digest() == self.orchestrator.state_digest()


class _AttrView:
    """Orchestrator proxy plus the public read-only attributes clients use."""

    def __init__(self, remote: Remote, orch: Orchestrator):
        self._remote = remote
        self._orch = orch

    @property
    def public_key(self) -> bytes:
        return self._orch.public_key

    def __getattr__(self, name: str):
        return getattr(self._remote, name)


class _taint_hook:
    def __init__(self, taint: TaintMap):
        self.taint = taint

    def __enter__(self):
        cryptobox.set_taint_observer(self.taint.register)
        return self.taint

    def __exit__(self, *exc):
        cryptobox.set_taint_observer(None)
        return False


def run_scenario(config: SimConfig, worker_factory=None, run_task_fn=None) -> SimResult:
    """Execute a scripted scenario; identical configs give identical traces.

    worker_factory and run_task_fn exist so tests can plant doubles (for
    example a deliberately leaky worker) without touching production paths.
    """
    return _Runner(config, worker_factory=worker_factory, run_task_fn=run_task_fn).run()


# ---------------------------------------------------------------------------
# Privacy verdict
# ---------------------------------------------------------------------------


def check_key_confidentiality(result: SimResult) -> list[dict]:
    """No single custodian's retained state may suffice to recover any key.

    For every share a node holds: reconstruction from that node's state alone
    fails the n-of-n count, and using the lone share as a key fails AEAD
    authentication against the record it guards. Returns violations.
    """
    from ..cryptobox import AuthenticationFailed, MissingShares, SealedBlob
    from ..cryptobox import decrypt_blob, reconstruct_key

    n = len(result.custodians)
    violations: list[dict] = []
    if n <= 1:
        return violations  # single-custodian custody holds the key by design
    for node in result.custodians:
        for record_id, share in node._shares.items():
            try:
                reconstruct_key([share], n)
                violations.append(
                    {"actor": node.node_id, "record": record_id, "why": "count accepted"}
                )
            except MissingShares:
                pass
            if not result.storage.has_blob(record_id):
                continue
            sealed = result.storage.get_blob(record_id).sealed
            if not isinstance(sealed, SealedBlob):
                continue
            try:
                decrypt_blob(share, sealed)
                violations.append(
                    {"actor": node.node_id, "record": record_id, "why": "share decrypts blob"}
                )
            except AuthenticationFailed:
                pass
    return violations


def assert_privacy(result: SimResult) -> PrivacyVerdict:
    """Valid iff no tainted plaintext appeared in any message or in the
    retained state of storage, custodians, orchestrator, or any destroyed
    worker. Workers may hold plaintext only while alive; clients own theirs."""
    violations: list[dict] = []
    for hit in result.net.message_taints:
        violations.append({"where": "message", **hit})
    taint = result.net.taint
    state_actors: list[tuple[str, object]] = [
        ("storage", result.storage),
        ("orchestrator", result.orchestrator),
    ]
    state_actors += [(n.node_id, n) for n in result.custodians]
    state_actors += [
        (f"destroyed-worker-{i}", w) for i, w in enumerate(result.destroyed_workers)
    ]
    for name, obj in state_actors:
        for fingerprint in sorted(taint.find_in_value(obj)):
            violations.append({"where": "state", "actor": name, "fingerprint": fingerprint})
    return PrivacyVerdict(valid=not violations, violations=violations)


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def write_trace(result: SimResult, path: str | Path) -> None:
    """First line: config; then one message per line; last line: summary."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"type": "config", **result.config.to_dict()}) + "\n")
        for event in result.net.trace:
            fh.write(json.dumps({"type": "message", **event.to_dict()}) + "\n")
        fh.write(
            json.dumps(
                {
                    "type": "summary",
                    **result.summary(),
                    "privacy_valid": assert_privacy(result).valid,
                }
            )
            + "\n"
        )


def verify_trace(path: str | Path) -> dict:
    """Re-run the embedded config and compare digests line for line."""
    lines = [json.loads(l) for l in Path(path).read_text(encoding="utf-8").splitlines() if l]
    if not lines or lines[0].get("type") != "config" or lines[-1].get("type") != "summary":
        raise ScenarioError("not a trace file")
    config = SimConfig.from_dict(lines[0])
    recorded_summary = lines[-1]
    result = run_scenario(config)
    fresh = result.summary()
    matches = {
        "trace_digest": fresh["trace_digest"] == recorded_summary.get("trace_digest"),
        "state_digest": fresh["state_digest"] == recorded_summary.get("state_digest"),
        "chain_valid": result.chain_first_invalid is None,
        "replay_equal": result.replay_equal,
        "privacy_valid": assert_privacy(result).valid
        == recorded_summary.get("privacy_valid", True),
    }
    return {"ok": all(matches.values()), "checks": matches}
