"""Walkthrough: why the ledger is worth trusting.

Build a small chain, then corrupt it three different ways and watch
verification name the first bad block each time. Finally, fold the chain
into the learning-tuple view any auditor can compute.
"""

from dataclasses import replace

from sealnet.cryptobox import Identity, Rng
from sealnet.ledger import (
    DataRegistered,
    Ledger,
    PerformanceRecorded,
    TaskCreated,
    WorkerAssigned,
    query_learning,
    verify_chain,
)

signer = Identity.generate(Rng(7))
worker = Identity.generate(Rng(8))
led = Ledger(signer)
led.append_event(DataRegistered("d1" * 32, "alice", "raw-data", "demo"), clock=1)
led.append_event(
    TaskCreated(task_id="t1", kind="learn", data_ids=("d1" * 32,),
                algorithm_or_model_id="a1" * 32, challenge_id="demo"),
    clock=2,
)
led.append_event(WorkerAssigned("t1", worker.public_key), clock=3)
led.append_event(PerformanceRecorded("t1", "m1" * 32, 0.83), clock=4)

blocks = led.blocks
print("clean chain verifies:", verify_chain(blocks, signer.public_key) is None)

# 1. rewrite history: bump the recorded performance
tampered = list(blocks)
tampered[3] = replace(tampered[3], event=PerformanceRecorded("t1", "m1" * 32, 0.99))
print("performance edited   -> first invalid index:",
      verify_chain(tampered, signer.public_key))

# 2. clip a block out of the middle
clipped = [blocks[0]] + blocks[2:]
print("block removed        -> first invalid index:",
      verify_chain(clipped, signer.public_key))

# 3. re-sign with a different key (a fake orchestrator)
fake = Ledger(Identity.generate(Rng(9)))
for block in blocks:
    fake.append_event(block.event, block.timestamp)
print("re-signed chain      -> first invalid index:",
      verify_chain(fake.blocks, signer.public_key))

print("\nlearning tuples anyone can fold out of the chain:")
for t in query_learning(blocks):
    print(f"  data={t.data_id[:8]}… model={t.model_id[:8]}… "
          f"worker={'yes' if t.worker_id else 'no'} performance={t.performance}")
