"""Replicated read/write registers with fast local reads and blocking writes.

A write broadcasts the new value and completes only once the writer
delivers its own message back; a read returns the local replica
immediately.  Registers spring into existence on first mention and start
at the absent value ``BOTTOM``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolationError, ProtocolBugError


class _Bottom:
    """Absent-value marker, distinct from every writable value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"

    def __bool__(self):
        return False


BOTTOM = _Bottom()


@dataclass(frozen=True)
class WriteMessage:
    """Payload broadcast by a register write."""

    register: str
    value: object
    writer: int
    op_id: int = -1  # history bookkeeping; not part of the ordering logic

    def __post_init__(self):
        if self.value is BOTTOM:
            raise ContractViolationError("BOTTOM is reserved for never-written registers")


class RegisterStore:
    """Register replicas of one process, driven by its program and deliveries."""

    def __init__(self, owner: int):
        self.owner = owner
        self.values: dict[str, object] = {}
        self.write_in_flight = False

    def read(self, register: str):
        """Return the current local copy; BOTTOM if nothing delivered yet."""
        return self.values.get(register, BOTTOM)

    def begin_write(self, register: str, value, op_id: int = -1) -> WriteMessage:
        """Arm the in-flight flag and produce the message to broadcast.

        The caller must suspend the writing process until
        :meth:`on_deliver_write` sees the write come back.  Re-entering
        while a write is still in flight breaks the sequential-process
        contract.
        """
        if self.write_in_flight:
            raise ContractViolationError(
                f"process {self.owner} started a write while one is in flight"
            )
        self.write_in_flight = True
        return WriteMessage(register, value, self.owner, op_id)

    def on_deliver_write(self, msg: WriteMessage) -> bool:
        """Apply a delivered write; returns True when it releases our own write."""
        self.values[msg.register] = msg.value
        if msg.writer == self.owner:
            if not self.write_in_flight:
                raise ProtocolBugError(
                    f"process {self.owner} delivered its own write with none in flight"
                )
            self.write_in_flight = False
            return True
        return False
