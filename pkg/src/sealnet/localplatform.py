"""Single-machine platform state for the CLI.

Everything lives under one state directory: the chain, the blob store, the
custodians' shares, challenge specs, and account registrations. Loading
replays the chain through the same fold the orchestrator uses live, so a
reloaded platform is bit-for-bit the state the chain describes.

This mode trades the simulation's isolation guarantees for convenience: all
actors run in one process and the orchestrator's signing key sits in the
state directory.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

from .cryptobox import CustodianNode, Identity, Rng
from .errors import SealnetError
from .ledger import Ledger, load_chain, save_chain, verify_chain
from .orchestrator import ChallengeSpec, Orchestrator
from .storage import BlobStore


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass
class LocalPlatform:
    root: Path
    orchestrator: Orchestrator
    storage: BlobStore
    custodians: list[CustodianNode]
    signer: Identity

    @classmethod
    def create(
        cls,
        root: str | Path,
        *,
        custodian_count: int = 3,
        top_k: int = 3,
        fee_rate: float = 0.1,
        seed: int | None = None,
    ) -> "LocalPlatform":
        root = Path(root)
        if (root / "config.json").exists():
            raise SealnetError(f"platform already exists at {root}")
        root.mkdir(parents=True, exist_ok=True)
        rng = Rng(seed)
        signer = Identity.generate(rng)
        config = {
            "custodian_count": custodian_count,
            "top_k": top_k,
            "fee_rate": fee_rate,
            "orchestrator_secret": signer.secret_key.hex(),
        }
        (root / "config.json").write_text(json.dumps(config, indent=1))
        platform = cls(
            root=root,
            orchestrator=cls._fresh_orchestrator(signer, custodian_count, top_k, fee_rate),
            storage=BlobStore(),
            custodians=[CustodianNode(f"node-{i}", Rng()) for i in range(custodian_count)],
            signer=signer,
        )
        platform._wire()
        platform.save()
        return platform

    @staticmethod
    def _fresh_orchestrator(signer, custodian_count, top_k, fee_rate) -> Orchestrator:
        return Orchestrator(
            signer,
            clock=_now_ms,
            custodian_ids=tuple(f"node-{i}" for i in range(custodian_count)),
            top_k=top_k,
            fee_rate=fee_rate,
        )

    def _wire(self) -> None:
        self.orchestrator._has_blob = self.storage.has_blob

    @classmethod
    def load(cls, root: str | Path) -> "LocalPlatform":
        root = Path(root)
        config = json.loads((root / "config.json").read_text())
        signer = Identity.from_secret(bytes.fromhex(config["orchestrator_secret"]))
        storage = BlobStore.load_dir(root / "blobs")

        chain_path = root / "chain.ndjson"
        blocks = load_chain(chain_path) if chain_path.exists() else []
        bad = verify_chain(blocks, signer.public_key)
        if bad is not None:
            raise SealnetError(f"stored chain invalid at index {bad}")

        aux = json.loads((root / "aux.json").read_text()) if (root / "aux.json").exists() else {}
        challenges = {
            cid: ChallengeSpec(
                challenge_id=cid,
                description=c.get("description", ""),
                label_set=tuple(c["label_set"]),
                validation_data_ids=tuple(c["validation_data_ids"]),
            )
            for cid, c in aux.get("challenges", {}).items()
        }
        directory = {a: bytes.fromhex(k) for a, k in aux.get("directory", {}).items()}
        initial = {a: int(v) for a, v in aux.get("initial_balances", {}).items()}

        orch = Orchestrator.replay(
            blocks,
            challenges=challenges,
            directory=directory,
            initial_balances=initial,
            custodian_ids=tuple(f"node-{i}" for i in range(config["custodian_count"])),
            top_k=config.get("top_k", 3),
            fee_rate=config.get("fee_rate", 0.1),
        )
        # Re-attach the signing identity so the loaded platform can append.
        orch.ledger = Ledger(signer, blocks=blocks)
        orch._clock = _now_ms

        custodians = []
        shares = aux.get("custodian_shares", {})
        for i in range(config["custodian_count"]):
            node = CustodianNode(f"node-{i}", Rng())
            for record_id, share_hex in shares.get(node.node_id, {}).items():
                node.receive_share(record_id, bytes.fromhex(share_hex))
            custodians.append(node)

        platform = cls(
            root=root, orchestrator=orch, storage=storage, custodians=custodians, signer=signer
        )
        platform._wire()
        return platform

    def save(self) -> None:
        save_chain(self.orchestrator.chain_blocks(), self.root / "chain.ndjson")
        self.storage.save_dir(self.root / "blobs")
        aux = {
            "challenges": {
                cid: {
                    "description": spec.description,
                    "label_set": list(spec.label_set),
                    "validation_data_ids": list(spec.validation_data_ids),
                }
                for cid, spec in self.orchestrator.challenges.items()
            },
            "directory": {a: k.hex() for a, k in self.orchestrator.directory.items()},
            "initial_balances": self.orchestrator.initial_balances,
            "custodian_shares": {
                node.node_id: {r: s.hex() for r, s in node._shares.items()}
                for node in self.custodians
            },
        }
        (self.root / "aux.json").write_text(json.dumps(aux, indent=1))

    def ledger_view(self):
        return self.orchestrator.ledger_view_for("local")
