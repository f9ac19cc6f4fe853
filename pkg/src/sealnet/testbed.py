"""A ready-made in-process platform with one completed prediction.

Used by demos and by the review-UI integration test: `python -m
sealnet.testbed` builds the platform, serves the owner's gateway on an
ephemeral loopback port, prints `PORT <n>`, and runs until stdin closes.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from .client.gateway import GatewayApi, make_server, serve_forever_in_thread
from .client.ops import Client
from .client.vault import keygen
from .cryptobox import CustodianNode, Identity, Rng
from .orchestrator import NoWork, Orchestrator
from .storage import BlobStore
from .compute.worker import run_task, spawn_worker

VALIDATION_CSV = "f0,f1,label\n0.0,0.0,A\n0.0,2.0,A\n2.0,0.0,B\n2.0,2.0,B\n"
TRAIN_CSV = "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n1.9,0.2,B\n2.1,2.0,B\n"
PREDICT_CSV = "f0,f1\n0.1,0.2\n1.9,1.8\n0.0,1.9\n2.1,0.1\n"


@dataclass
class Testbed:
    orchestrator: Orchestrator
    storage: BlobStore
    custodians: list[CustodianNode]
    owner: Client
    challenge_id: str
    data_record_id: str
    algorithm_record_id: str
    prediction_task_id: str
    input_record_id: str

    def drain(self) -> int:
        done = 0
        while True:
            worker = spawn_worker(self.rng.child("worker"))
            try:
                run_task(
                    worker,
                    self.orchestrator,
                    self.storage,
                    self.custodians,
                    self.orchestrator.ledger_view_for("local"),
                    self.rng.child("worker-run"),
                )
            except NoWork:
                return done
            done += 1

    rng: Rng = None  # set in build()


def build(seed: int = 2024) -> Testbed:
    """Platform with a trained model and one fetched-ready prediction."""
    rng = Rng(seed)
    storage = BlobStore()
    custodians = [CustodianNode(f"node-{i}", rng.child(f"node-{i}")) for i in range(3)]
    orch = Orchestrator(
        Identity.generate(rng.child("orchestrator")),
        clock=_counter(),
        storage_has_blob=storage.has_blob,
        custodian_ids=tuple(n.node_id for n in custodians),
    )
    vault = keygen("expert", rng.child("vault"))
    owner = Client(
        vault, orchestrator=orch, storage=storage, custodians=custodians, rng=rng.child("client")
    )
    orch.register_account("expert", vault.identity.seal_public, 500)

    owner.create_challenge("night-stages", ["A", "B"], [VALIDATION_CSV])
    data_id = owner.upload_data(TRAIN_CSV, "night-stages")
    algo_id = owner.submit_algorithm('{"name": "centroid"}', "night-stages")

    bed = Testbed(
        orchestrator=orch,
        storage=storage,
        custodians=custodians,
        owner=owner,
        challenge_id="night-stages",
        data_record_id=data_id,
        algorithm_record_id=algo_id,
        prediction_task_id="",
        input_record_id="",
    )
    bed.rng = rng
    bed.drain()

    task_id = owner.request_prediction(PREDICT_CSV, "night-stages", payment=30)
    bed.prediction_task_id = task_id
    bed.input_record_id = vault.predict_tasks[task_id]
    bed.drain()
    return bed


def _counter():
    state = {"t": 0}

    def clock() -> int:
        state["t"] += 1
        return state["t"]

    return clock


def main() -> int:
    bed = build()
    api = GatewayApi(bed.owner)
    server = make_server(api, port=0)
    serve_forever_in_thread(server)
    print(f"PORT {server.server_address[1]}", flush=True)
    print(f"prediction task: {bed.prediction_task_id}", flush=True)
    # Stay alive until the parent closes stdin.
    sys.stdin.read()
    server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
