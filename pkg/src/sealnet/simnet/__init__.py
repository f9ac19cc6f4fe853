from .taint import TaintMap
from .net import Fault, FaultPlan, NodeUnreachable, MessageDropped, SimNet, TraceEvent
from .scenario import (
    ConflictingFault,
    PrivacyVerdict,
    ScenarioError,
    SimConfig,
    SimResult,
    assert_privacy,
    check_key_confidentiality,
    inject_fault,
    run_scenario,
    verify_trace,
    write_trace,
)

__all__ = [
    "TaintMap",
    "SimNet",
    "TraceEvent",
    "Fault",
    "FaultPlan",
    "NodeUnreachable",
    "MessageDropped",
    "SimConfig",
    "SimResult",
    "ScenarioError",
    "ConflictingFault",
    "PrivacyVerdict",
    "run_scenario",
    "assert_privacy",
    "check_key_confidentiality",
    "inject_fault",
    "write_trace",
    "verify_trace",
]
