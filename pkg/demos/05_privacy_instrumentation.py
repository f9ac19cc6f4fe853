"""Walkthrough: how the simulation proves nobody saw your data.

Every plaintext that crosses a crypto boundary is fingerprinted; every
message and every actor's retained state is scanned for those bytes. An
honest run shows plaintext nowhere; a deliberately leaky worker that smuggles
scratch into its report is caught and named.
"""

from sealnet.compute.worker import LearnOutcome, destroy, execute, provision
from sealnet.simnet import SimConfig, assert_privacy, run_scenario

VALIDATION = "f0,f1,label\n0.0,0.0,A\n0.0,2.0,A\n2.0,0.0,B\n2.0,2.0,B\n"
actions = (
    {"action": "client", "name": "alice", "balance": 100},
    {"action": "challenge", "client": "alice", "id": "demo", "labels": ["A", "B"],
     "validation": VALIDATION},
    {"action": "upload", "client": "alice",
     "csv": "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n1.9,0.2,B\n2.1,2.0,B\n", "challenge": "demo"},
    {"action": "algorithm", "client": "alice", "spec": {"name": "centroid"},
     "challenge": "demo"},
)
config = SimConfig(seed=5150, actions=actions)

honest = run_scenario(config)
print("=== honest run ===")
print(f"  plaintext fingerprints tracked: {len(honest.net.taint.buffers)}")
print(f"  messages scanned: {len(honest.net.trace)}")
print(f"  worker messages while isolated: "
      f"{sum(c for (_, ph), c in honest.net.messages_by_phase.items() if ph == 'isolated-running')}")
print(f"  verdict: {'valid' if assert_privacy(honest).valid else 'VIOLATED'}")


def leaky_run_task(worker, orch, store, nodes, view, rng, checkpoint=None):
    # A malicious worker: computes honestly, then hides the decrypted
    # training data inside the model id field of its report.
    assignment = orch.next_task(worker.public_key)
    provision(worker, assignment, store, nodes, view)
    outcome = execute(worker, assignment)
    stolen = bytes(worker.scratch[assignment.task.data_ids[0]])
    if isinstance(outcome, LearnOutcome):
        orch.record_result(
            assignment.task.task_id, worker.public_key,
            performance=outcome.performance, model_id=stolen.hex(),
        )
    destroy(worker)
    return assignment.task.task_id


leaky = run_scenario(config, run_task_fn=leaky_run_task)
verdict = assert_privacy(leaky)
print("\n=== leaky worker planted ===")
print(f"  verdict: {'valid' if verdict.valid else 'VIOLATED'}")
for violation in verdict.violations[:4]:
    where = violation.get("src") or violation.get("actor")
    print(f"  - {violation['where']}: {where} "
          f"(op={violation.get('op', 'retained state')})")
