"""Hybrid total/causal order broadcast over a proximity graph, with a
deterministic simulator and history consistency checkers."""

from .broadcast import BroadcastState, PendingEntry
from .bruteforce import brute_force_check
from .checker import (
    Verdict,
    build_message_causal_order,
    build_read_from,
    check_broadcast_properties,
    check_causal_legality,
    check_cc,
    check_fisheye,
    check_sc,
    extend_r_rw_links,
    extend_rw_links,
    extend_ww,
)
from .core import (
    CatchUp,
    ProximityGraph,
    Tocobc,
    TotalStamp,
    neighbors,
    stamp_less,
    vc_leq,
    zero_vector,
)
from .errors import (
    ContractViolationError,
    FisheyeError,
    IntegrityError,
    LivenessError,
    MalformedHistoryError,
    ProtocolBugError,
    SizeCapExceededError,
)
from .history import BroadcastEvent, History, Operation
from .sim import (
    DelayModel,
    Nop,
    ProcessProgram,
    Read,
    RepeatReadUntil,
    Scenario,
    Simulator,
    Write,
    run_scenario,
)
from .store import BOTTOM, RegisterStore, WriteMessage
from .workload import random_scenario

__all__ = [
    "BOTTOM",
    "BroadcastEvent",
    "BroadcastState",
    "CatchUp",
    "ContractViolationError",
    "DelayModel",
    "FisheyeError",
    "History",
    "IntegrityError",
    "LivenessError",
    "MalformedHistoryError",
    "Nop",
    "Operation",
    "PendingEntry",
    "ProcessProgram",
    "ProtocolBugError",
    "ProximityGraph",
    "Read",
    "RegisterStore",
    "RepeatReadUntil",
    "Scenario",
    "Simulator",
    "SizeCapExceededError",
    "Tocobc",
    "TotalStamp",
    "Verdict",
    "Write",
    "WriteMessage",
    "brute_force_check",
    "build_message_causal_order",
    "build_read_from",
    "check_broadcast_properties",
    "check_causal_legality",
    "check_cc",
    "check_fisheye",
    "check_sc",
    "extend_r_rw_links",
    "extend_rw_links",
    "extend_ww",
    "neighbors",
    "random_scenario",
    "run_scenario",
    "stamp_less",
    "vc_leq",
    "zero_vector",
]
