import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from sealnet.client.ops import Client
from sealnet.client.vault import keygen
from sealnet.cryptobox import CustodianNode, Identity, Rng
from sealnet.orchestrator import NoWork, Orchestrator
from sealnet.storage import BlobStore
from sealnet.compute.worker import run_task, spawn_worker

VALIDATION_CSV = "f0,f1,label\n0.0,0.0,A\n0.0,2.0,A\n2.0,0.0,B\n2.0,2.0,B\n"
TRAIN_CSV = "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n1.9,0.2,B\n2.1,2.0,B\n"
TRAIN_CSV_2 = "f0,f1,label\n0.0,0.3,A\n2.2,1.8,B\n"
PREDICT_CSV = "f0,f1\n0.1,0.2\n1.9,1.8\n"
CENTROID_SPEC = '{"name": "centroid"}'
LOGREG_SPEC = '{"name": "logreg", "hyperparameters": {"learning_rate": 0.1, "epochs": 100}}'


def logical_clock():
    state = {"t": 0}

    def clock() -> int:
        state["t"] += 1
        return state["t"]

    return clock


@dataclass
class Platform:
    """In-process platform wiring for direct-call tests."""

    rng: Rng
    orchestrator: Orchestrator
    storage: BlobStore
    custodians: list[CustodianNode]
    clients: dict[str, Client]

    def add_client(self, name: str, balance: int = 0) -> Client:
        vault = keygen(name, self.rng.child(f"vault-{name}"))
        client = Client(
            vault,
            orchestrator=self.orchestrator,
            storage=self.storage,
            custodians=self.custodians,
            rng=self.rng.child(f"client-{name}"),
        )
        self.orchestrator.register_account(name, vault.identity.seal_public, balance)
        self.clients[name] = client
        return client

    def drain(self, max_workers: int = 50) -> int:
        done = 0
        for _ in range(max_workers):
            worker = spawn_worker(self.rng.child("worker"))
            try:
                run_task(
                    worker,
                    self.orchestrator,
                    self.storage,
                    self.custodians,
                    self.orchestrator.ledger_view_for("test"),
                    self.rng.child("worker-run"),
                )
            except NoWork:
                break
            done += 1
        return done


def make_platform(seed: int = 99, custodian_count: int = 3, **orch_kwargs) -> Platform:
    rng = Rng(seed)
    storage = BlobStore()
    custodians = [
        CustodianNode(f"node-{i}", rng.child(f"node-{i}")) for i in range(custodian_count)
    ]
    orch = Orchestrator(
        Identity.generate(rng.child("orch")),
        clock=logical_clock(),
        storage_has_blob=storage.has_blob,
        custodian_ids=tuple(n.node_id for n in custodians),
        **orch_kwargs,
    )
    return Platform(rng=rng, orchestrator=orch, storage=storage, custodians=custodians, clients={})


@pytest.fixture
def platform() -> Platform:
    return make_platform()


@pytest.fixture
def trained_platform() -> Platform:
    """Platform with a challenge, two datasets, one algorithm, all trained."""
    p = make_platform(seed=31)
    alice = p.add_client("alice", 200)
    bob = p.add_client("bob", 50)
    alice.create_challenge("demo", ["A", "B"], [VALIDATION_CSV])
    alice.upload_data(TRAIN_CSV, "demo")
    bob.upload_data(TRAIN_CSV_2, "demo")
    bob.submit_algorithm(CENTROID_SPEC, "demo")
    p.drain()
    return p
