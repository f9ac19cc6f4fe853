"""Walkthrough: the network misbehaves, the run still converges.

Same scenario, three runs: clean, with the first worker killed mid-flight,
and with a key-share release dropped. Deaths requeue the task exactly once;
the trace stays deterministic for a given seed and fault plan.
"""

from sealnet.ledger import TaskRequeued
from sealnet.simnet import Fault, SimConfig, assert_privacy, inject_fault, run_scenario

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
base = SimConfig(seed=99, actions=actions)


def report(title, result):
    requeues = sum(
        1 for b in result.orchestrator.chain_blocks() if isinstance(b.event, TaskRequeued)
    )
    statuses = sorted(t.status for t in result.orchestrator.tasks.values())
    print(f"{title}")
    print(f"  tasks: {statuses}  requeues on chain: {requeues}")
    print(f"  stuck: {result.stuck_tasks or 'none'}  replay equal: {result.replay_equal}")
    print(f"  privacy: {'valid' if assert_privacy(result).valid else 'VIOLATED'}")
    print(f"  trace digest: {result.trace_digest()[:16]}…")


report("clean run", run_scenario(base))

killed = inject_fault(base, Fault(kind="kill_worker", phase="provisioned", nth=1))
report("\nfirst worker killed after provisioning", run_scenario(killed))

dropped = inject_fault(base, Fault(kind="drop", op="release_share", nth=1))
report("\nfirst key-share release dropped", run_scenario(dropped))

# determinism: a faulted run re-executes to the same trace
again = run_scenario(killed)
print("\nsame fault plan, same seed, same trace:",
      again.trace_digest() == run_scenario(killed).trace_digest())
