"""Shared domain types: process ids, clocks, stamps, proximity graphs, protocol messages.

All values here are immutable once constructed and can be shared or copied
freely.  Process ids are dense integers in ``[0, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ContractViolationError

# A vector clock is a fixed-length tuple of non-negative ints, one entry per
# process. Length is pinned at system construction time.
VectorClock = tuple


def zero_vector(n: int) -> tuple:
    if n < 1:
        raise ContractViolationError(f"system size must be >= 1, got {n}")
    return (0,) * n


def vc_leq(a, b) -> bool:
    """Entrywise <= on two vector clocks of equal length."""
    if len(a) != len(b):
        raise ContractViolationError(
            f"vector clock length mismatch: {len(a)} vs {len(b)}"
        )
    return all(x <= y for x, y in zip(a, b))


class TotalStamp(NamedTuple):
    """Scalar logical clock value paired with the sender id.

    Stamps are strictly totally ordered: first by time, ties broken by
    ascending process id.  No two broadcast messages of one execution carry
    the same stamp.
    """

    time: int
    pid: int


def stamp_less(a: TotalStamp, b: TotalStamp) -> bool:
    """Strict total order on stamps (time first, then ascending pid)."""
    return (a.time, a.pid) < (b.time, b.pid)


@dataclass(frozen=True)
class ProximityGraph:
    """Undirected graph over process ids; parameter of every delivery guarantee.

    Processes joined by an edge get the strong (agreed-order) guarantee;
    everyone else only gets causal delivery.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolationError(f"graph needs n >= 1, got {self.n}")
        norm = set()
        for e in self.edges:
            a, b = e
            if a == b:
                raise ContractViolationError(f"self-loop on process {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ContractViolationError(f"edge {e} out of range for n={self.n}")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def empty(cls, n: int) -> "ProximityGraph":
        return cls(n, frozenset())

    @classmethod
    def complete(cls, n: int) -> "ProximityGraph":
        return cls(n, frozenset((a, b) for a in range(n) for b in range(a + 1, n)))

    @classmethod
    def of(cls, n: int, pairs) -> "ProximityGraph":
        return cls(n, frozenset(tuple(p) for p in pairs))

    def neighbors(self, p: int) -> frozenset:
        """All q with an edge {p, q}; never contains p itself."""
        if not (0 <= p < self.n):
            raise ContractViolationError(f"pid {p} out of range for n={self.n}")
        out = set()
        for a, b in self.edges:
            if a == p:
                out.add(b)
            elif b == p:
                out.add(a)
        return frozenset(out)

    def has_edge(self, p: int, q: int) -> bool:
        return (min(p, q), max(p, q)) in self.edges

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2


def neighbors(g: ProximityGraph, p: int) -> frozenset:
    """Module-level alias for :meth:`ProximityGraph.neighbors`."""
    return g.neighbors(p)


@dataclass(frozen=True)
class Tocobc:
    """Broadcast protocol message: payload plus its ordering metadata."""

    payload: object
    s_caus: tuple
    s_tot: int
    sender: int

    @property
    def stamp(self) -> TotalStamp:
        return TotalStamp(self.s_tot, self.sender)


@dataclass(frozen=True)
class CatchUp:
    """Clock advertisement letting remote stability tests progress."""

    last_date: int
    sender: int
