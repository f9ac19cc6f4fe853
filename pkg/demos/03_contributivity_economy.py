"""Walkthrough: who gets paid, and why.

Two datasets enter a challenge: one carries all the signal, the other only
duplicates rows the first already has. A leave-one-out valuation round
measures each datum's marginal value, and the next prediction fee is split
accordingly: the duplicate earns nothing.
"""

from sealnet.simnet import SimConfig, run_scenario

VALIDATION = "f0,f1,label\n0.0,0.0,A\n0.0,2.0,A\n2.0,0.0,B\n2.0,2.0,B\n"
INFORMATIVE = "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n1.9,0.2,B\n2.1,2.0,B\n"
DUPLICATE = "f0,f1,label\n0.1,0.1,A\n0.2,1.9,A\n"  # rows copied from above

actions = (
    {"action": "client", "name": "alice", "balance": 100},   # informative data
    {"action": "client", "name": "carol", "balance": 100},   # duplicate data
    {"action": "client", "name": "bob", "balance": 100},     # algorithm + requester
    {"action": "challenge", "client": "alice", "id": "demo", "labels": ["A", "B"],
     "validation": VALIDATION},
    {"action": "upload", "client": "alice", "csv": INFORMATIVE, "challenge": "demo"},
    {"action": "upload", "client": "carol", "csv": DUPLICATE, "challenge": "demo"},
    {"action": "algorithm", "client": "bob", "spec": {"name": "centroid"}, "challenge": "demo"},
    {"action": "value", "client": "alice", "challenge": "demo"},
    {"action": "predict", "client": "bob", "csv": "f0,f1\n0.1,0.2\n1.9,1.8\n",
     "challenge": "demo", "payment": 40},
)

result = run_scenario(SimConfig(seed=1234, actions=actions))
orch = result.orchestrator

vector = orch.contributivity("demo")
owner_of = {r: info.owner_id for r, info in orch.records.items()}
print("=== contributivity (leave-one-out marginal performance) ===")
print(f"  basis performance (full dataset): {vector.basis_performance:.3f}")
for data_id, score in vector.entries:
    print(f"  {owner_of[data_id]:<6} {data_id[:10]}…  score={score}")

print("\n=== shadow learn tasks that measured it ===")
for task in orch.tasks.values():
    if task.shadow:
        print(f"  {task.task_id}: trained on {len(task.data_ids)} dataset(s) "
              f"-> performance {task.performance}")

print("\n=== the 40-credit prediction fee, split ===")
from sealnet.ledger import PaymentRecorded

for block in orch.chain_blocks():
    if isinstance(block.event, PaymentRecorded):
        for account, amount in block.event.splits:
            print(f"  {account:<6} +{amount}")

print("\n=== final balances (started at 100 each) ===")
for account, balance in sorted(orch.accounts.as_dict().items()):
    print(f"  {account:<8} {balance}")
print("\nexcluded from future training (zero contributivity):",
      {d[:10] + "…" for d in orch.excluded["demo"]})
