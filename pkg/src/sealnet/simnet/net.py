"""Deterministic in-process network.

Components interact through instrumented synchronous calls: each call is two
traced messages (request, response) on a logical clock, scanned for tainted
plaintext, counted per actor and worker phase, and subject to the fault plan
(offline windows, message drops). Single-threaded by construction; all
nondeterminism comes from the run seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..canon import canonical_json, sha256_hex
from ..errors import TransportError
from .taint import TaintMap


class NodeUnreachable(TransportError):
    pass


class MessageDropped(TransportError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    time: int
    src: str
    dst: str
    op: str
    direction: str  # "req" | "resp" | "err"
    digest: str
    src_phase: str | None = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "time": self.time,
            "src": self.src,
            "dst": self.dst,
            "op": self.op,
            "direction": self.direction,
            "digest": self.digest,
            "src_phase": self.src_phase,
        }


@dataclass(frozen=True)
class Fault:
    kind: str  # offline | drop | kill_worker
    actor: str = ""  # offline: which actor
    start: int = 0  # offline: logical-time window [start, end)
    end: int = 0
    op: str = ""  # drop: operation name
    dst: str = ""  # drop: optional destination filter
    nth: int = 1  # drop/kill: which matching occurrence (1-based)
    phase: str = ""  # kill_worker: phase checkpoint at which to die

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "Fault":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


class FaultPlan:
    def __init__(self, faults: list[Fault] | None = None):
        self.faults = list(faults or [])
        self._drop_counts: dict[int, int] = {}
        self._kill_counts: dict[int, int] = {}

    def offline(self, actor: str, time: int) -> bool:
        return any(
            f.kind == "offline" and f.actor == actor and f.start <= time < f.end
            for f in self.faults
        )

    def should_drop(self, op: str, dst: str) -> bool:
        for i, f in enumerate(self.faults):
            if f.kind != "drop" or f.op != op:
                continue
            if f.dst and f.dst != dst:
                continue
            count = self._drop_counts.get(i, 0) + 1
            self._drop_counts[i] = count
            # nth=0 drops every match, otherwise only the nth one.
            if f.nth == 0 or count == f.nth:
                return True
        return False

    def should_kill(self, phase: str) -> bool:
        for i, f in enumerate(self.faults):
            if f.kind != "kill_worker" or f.phase != phase:
                continue
            count = self._kill_counts.get(i, 0) + 1
            self._kill_counts[i] = count
            if f.nth == 0 or count == f.nth:
                return True
        return False


class SimNet:
    """Message fabric, clock, trace, and privacy instrumentation."""

    def __init__(self, seed: int, faults: FaultPlan | None = None):
        self.seed = seed
        self.clock = 0
        self.trace: list[TraceEvent] = []
        self.taint = TaintMap()
        self.faults = faults or FaultPlan()
        self.actors: dict[str, object] = {}
        self.worker_phases: dict[str, object] = {}  # name -> WorkerState
        self.messages_by_phase: dict[tuple[str, str], int] = {}
        self.message_taints: list[dict] = []

    def register(self, name: str, obj: object) -> None:
        self.actors[name] = obj

    def register_worker(self, name: str, state: object) -> None:
        self.actors[name] = state
        self.worker_phases[name] = state

    def _phase_of(self, name: str) -> str | None:
        state = self.worker_phases.get(name)
        return getattr(state, "phase", None) if state is not None else None

    def _record(self, src: str, dst: str, op: str, direction: str, payload) -> None:
        self.clock += 1
        phase = self._phase_of(src)
        digest = sha256_hex(canonical_json(_digestable(payload)))
        self.trace.append(
            TraceEvent(
                seq=len(self.trace),
                time=self.clock,
                src=src,
                dst=dst,
                op=op,
                direction=direction,
                digest=digest,
                src_phase=phase,
            )
        )
        if phase is not None:
            key = (src, phase)
            self.messages_by_phase[key] = self.messages_by_phase.get(key, 0) + 1
        found = self.taint.find_in_value(payload)
        if found:
            self.taint.note_observed(src, found)
            for fp in sorted(found):
                self.message_taints.append(
                    {"src": src, "dst": dst, "op": op, "direction": direction, "fingerprint": fp}
                )

    def call(self, src: str, dst: str, op: str, fn, *args, **kwargs):
        """One instrumented request/response exchange."""
        if self.faults.offline(src, self.clock + 1):
            raise NodeUnreachable(f"{src} is offline at t={self.clock + 1}")
        self._record(src, dst, op, "req", {"args": list(args), "kwargs": kwargs})
        if self.faults.offline(dst, self.clock):
            raise NodeUnreachable(f"{dst} is offline at t={self.clock}")
        if self.faults.should_drop(op, dst):
            raise MessageDropped(f"{op} to {dst} dropped by fault plan")
        try:
            result = fn(*args, **kwargs)
        except Exception as exc:
            self._record(dst, src, op, "err", {"error": type(exc).__name__})
            raise
        self._record(dst, src, op, "resp", {"result": result})
        return result

    def trace_digest(self) -> str:
        return sha256_hex(canonical_json([e.to_dict() for e in self.trace]))


def _digestable(value, depth: int = 0):
    """Stable JSON-able projection of a payload for trace digests."""
    if depth > 10:
        return "..."
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value).hex()
    if isinstance(value, dict):
        return {str(k): _digestable(v, depth + 1) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_digestable(v, depth + 1) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_digestable(v, depth + 1) for v in value)
    to_dict = getattr(value, "to_dict", None)
    if callable(to_dict):
        return _digestable(to_dict(), depth + 1)
    inner = getattr(value, "__dict__", None)
    if inner is not None:
        return {k: _digestable(v, depth + 1) for k, v in inner.items() if not k.startswith("_")}
    return repr(value)


class Remote:
    """Proxy routing whitelisted method calls through the network fabric."""

    def __init__(self, net: SimNet, src: str, dst: str, target: object, ops: tuple[str, ...]):
        self._net = net
        self._src = src
        self._dst = dst
        self._target = target
        self._ops = ops

    def __getattr__(self, name: str):
        if name.startswith("_") or name not in self._ops:
            raise AttributeError(name)
        fn = getattr(self._target, name)

        def call(*args, **kwargs):
            return self._net.call(self._src, self._dst, name, fn, *args, **kwargs)

        return call


ORCHESTRATOR_OPS = (
    "register_data",
    "request_prediction",
    "next_task",
    "record_result",
    "requeue_task",
    "authorize_key_release",
    "benchmark",
    "challenge_info",
    "chain_blocks",
    "schedule_valuation",
    "create_challenge",
    "register_account",
    "contributivity",
)

STORAGE_OPS = ("put_blob", "get_blob", "has_blob")

CUSTODIAN_OPS = ("issue_challenge", "release_share", "receive_share", "holds_share")

LEDGER_VIEW_OPS = ("worker_for_task", "task_references")


class RemoteCustodian(Remote):
    """Custodian proxy that also exposes the node id like the real object.

    release_share is special-cased: the node verifies against its own
    (proxied) view of the orchestrator, never one supplied by the caller, so
    verification traffic is attributed node -> orchestrator.
    """

    def __init__(self, net: SimNet, src: str, dst: str, target, node_view, ops=CUSTODIAN_OPS):
        super().__init__(net, src, dst, target, ops)
        self.node_id = target.node_id
        self._node_view = node_view

    def release_share(self, challenge, signature, record_id, ledger_view=None):
        del ledger_view  # the node trusts only its own view
        target = self._target

        def handler(challenge, signature, record_id):
            return target.release_share(challenge, signature, record_id, self._node_view)

        return self._net.call(
            self._src, self._dst, "release_share", handler, challenge, signature, record_id
        )
