"""Walkthrough: one learning-and-prediction round on a simulated network.

Three data owners upload encrypted CSVs, two algorithm specs are submitted,
ephemeral workers consume the queue, and a paid prediction comes back sealed
to its requester. Every step lands on the signed hash chain.
"""

from sealnet.ledger import verify_chain
from sealnet.simnet import SimConfig, assert_privacy, run_scenario

VALIDATION = "f0,f1,label\n0.0,0.0,A\n0.0,2.0,A\n2.0,0.0,B\n2.0,2.0,B\n"

actions = (
    {"action": "client", "name": "alice", "balance": 100},
    {"action": "client", "name": "bob", "balance": 100},
    {"action": "client", "name": "carol", "balance": 100},
    {"action": "challenge", "client": "alice", "id": "demo", "labels": ["A", "B"],
     "validation": VALIDATION},
    {"action": "upload", "client": "alice",
     "csv": "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n1.9,0.2,B\n2.1,2.0,B\n", "challenge": "demo"},
    {"action": "upload", "client": "bob",
     "csv": "f0,f1,label\n0.0,0.2,A\n0.3,1.8,A\n1.8,0.1,B\n2.2,1.9,B\n", "challenge": "demo"},
    {"action": "upload", "client": "carol",
     "csv": "f0,f1,label\n0.2,0.0,A\n0.1,2.1,A\n2.0,0.3,B\n1.9,2.2,B\n", "challenge": "demo"},
    {"action": "algorithm", "client": "bob", "spec": {"name": "centroid"}, "challenge": "demo"},
    {"action": "algorithm", "client": "carol",
     "spec": {"name": "logreg", "hyperparameters": {"learning_rate": 0.1, "epochs": 100}},
     "challenge": "demo"},
    {"action": "predict", "client": "alice", "csv": "f0,f1\n0.1,0.2\n1.9,1.8\n",
     "challenge": "demo", "payment": 20},
    {"action": "fetch", "client": "alice"},
)

result = run_scenario(SimConfig(seed=2024, actions=actions))

print("=== chain ===")
for block in result.orchestrator.chain_blocks():
    event = block.event
    print(f"  #{block.index:<3} {type(event).__name__}")
print("chain verifies:", verify_chain(result.orchestrator.chain_blocks(),
                                      result.orchestrator.public_key) is None)

print("\n=== benchmark ===")
for row in result.orchestrator.benchmark("demo"):
    print(f"  {row.algorithm_id[:12]}…  best={row.best_performance:.3f}  "
          f"evaluations={row.evaluations}")

print("\n=== prediction ===")
print("  labels:", result.action_outputs[-1]["labels"])

print("\n=== privacy ===")
verdict = assert_privacy(result)
print(f"  messages traced: {len(result.net.trace)}")
print(f"  plaintext buffers fingerprinted: {len(result.net.taint.buffers)}")
print(f"  verdict: {'valid' if verdict.valid else verdict.violations}")

print("\n=== balances ===")
for account, balance in sorted(result.orchestrator.accounts.as_dict().items()):
    print(f"  {account:<8} {balance}")
