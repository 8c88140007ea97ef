"""Recorded histories: register operations plus broadcast-level events.

A history is the self-contained input to every checker.  Operations carry
per-process invocation/response counters (process order is the invocation
order); events record the send, receive, and delivery of each broadcast
write message, identified by its globally unique stamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ProximityGraph, TotalStamp
from .errors import MalformedHistoryError
from .store import BOTTOM

READ = "read"
WRITE = "write"

SEND = "send"
RECV = "recv"
DELIVER = "deliver"


@dataclass(frozen=True)
class Operation:
    op_id: int
    pid: int
    kind: str  # READ or WRITE
    register: str
    value: object  # BOTTOM only on reads of never-written registers
    inv: int = 0
    res: int = 0

    def is_read(self):
        return self.kind == READ

    def is_write(self):
        return self.kind == WRITE

    def __repr__(self):
        v = "BOT" if self.value is BOTTOM else self.value
        return f"op{self.op_id}[p{self.pid} {self.kind} {self.register}={v}]"


@dataclass(frozen=True)
class BroadcastEvent:
    seq: int
    kind: str  # SEND, RECV or DELIVER
    pid: int  # acting process (sender for SEND, receiver otherwise)
    stamp: TotalStamp
    op_id: int  # the write operation whose message this is


@dataclass
class History:
    n: int
    ops: list = field(default_factory=list)
    events: list = field(default_factory=list)
    graph: ProximityGraph | None = None
    seed: int | None = None

    # -- derived views ---------------------------------------------------------

    def ops_of(self, pid: int) -> list:
        """Operations of one process in process order."""
        return sorted((o for o in self.ops if o.pid == pid), key=lambda o: o.inv)

    def writes(self) -> list:
        return [o for o in self.ops if o.is_write()]

    def reads(self) -> list:
        return [o for o in self.ops if o.is_read()]

    def has_events(self) -> bool:
        return bool(self.events)

    def delivery_order(self, pid: int) -> list:
        """Stamps delivered at pid, in delivery order."""
        return [e.stamp for e in sorted(self.events, key=lambda e: e.seq)
                if e.kind == DELIVER and e.pid == pid]

    def sent_stamps(self) -> dict:
        """stamp -> op_id for every broadcast send in the history."""
        return {e.stamp: e.op_id for e in self.events if e.kind == SEND}

    def write_stamp(self, op_id: int) -> TotalStamp | None:
        for e in self.events:
            if e.kind == SEND and e.op_id == op_id:
                return e.stamp
        return None

    # -- validation ------------------------------------------------------------

    def validate(self) -> None:
        """Reject structurally broken histories before any checking runs."""
        seen_ids = set()
        for o in self.ops:
            if o.op_id in seen_ids:
                raise MalformedHistoryError(f"duplicate op id {o.op_id}")
            seen_ids.add(o.op_id)
            if not (0 <= o.pid < self.n):
                raise MalformedHistoryError(f"{o} has pid out of range for n={self.n}")
            if o.res < o.inv:
                raise MalformedHistoryError(f"{o} responds before it is invoked")
            if o.is_write() and o.value is BOTTOM:
                raise MalformedHistoryError(f"{o} writes the absent value")
        # Written values must be distinct per register so each read names a
        # unique source write.
        per_reg: dict = {}
        for o in self.writes():
            key = (o.register, o.value)
            if key in per_reg:
                raise MalformedHistoryError(
                    f"value {o.value!r} written twice to {o.register} ({per_reg[key]} and {o})"
                )
            per_reg[key] = o

    def source_write(self, read_op: Operation):
        """The unique write a read took its value from; None for BOTTOM reads."""
        if read_op.value is BOTTOM:
            return None
        for o in self.writes():
            if o.register == read_op.register and o.value == read_op.value:
                return o
        raise MalformedHistoryError(
            f"{read_op} returns a value never written to {read_op.register}"
        )
