"""Per-process state machine for the hybrid total/causal order broadcast.

Each process keeps a causal delivery vector, a view of every process's
scalar clock, and a pending set of received-but-undelivered messages.
Delivery runs as an event-driven fixpoint: after every receive or
broadcast, :meth:`BroadcastState.try_deliver` drains every message that has
become stable.  The three delivery filters are monotone in received
information, so this is equivalent to the blocking formulation.

Stability of a pending message from sender ``j`` means, for every neighbor
``k`` of ``j`` in the proximity graph:

* our view of ``k``'s clock has passed the message's stamp (no message from
  ``k`` still in flight can be ordered earlier), and
* no message from ``k`` already pending carries a smaller stamp.

Messages are then delivered in ascending stamp order, which yields a
globally agreed delivery order for neighbors and plain causal order for
everyone else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import CatchUp, ProximityGraph, Tocobc, TotalStamp, stamp_less, vc_leq, zero_vector
from .errors import ContractViolationError, IntegrityError, ProtocolBugError


@dataclass(frozen=True)
class PendingEntry:
    """A received application message plus its ordering metadata."""

    payload: object
    s_caus: tuple
    s_tot: int
    sender: int

    @property
    def stamp(self) -> TotalStamp:
        return TotalStamp(self.s_tot, self.sender)


@dataclass
class Outgoing:
    """A protocol message addressed to one destination process."""

    dest: int
    msg: object


class BroadcastState:
    """Broadcast engine for one logical process.

    Operations never block; ``broadcast`` and the receive handlers return
    the protocol messages to put on the wire, and ``try_deliver`` returns
    the application messages that became deliverable.  The instance is
    confined to a single logical process and is never reentered.
    """

    def __init__(self, self_id: int, graph: ProximityGraph, debug_checks: bool = False):
        if not (0 <= self_id < graph.n):
            raise ContractViolationError(f"pid {self_id} out of range for n={graph.n}")
        self.self_id = self_id
        self.graph = graph
        self.n = graph.n
        self.causal = list(zero_vector(graph.n))
        self.total = list(zero_vector(graph.n))
        self.pending: list[PendingEntry] = []
        self.delivered_log: list[tuple[object, TotalStamp]] = []
        self.debug_checks = debug_checks
        # Debug bookkeeping for the inline invariant checks.
        self._seen_stamps: set[TotalStamp] = set()
        self._last_sent_stot = 0
        self._known: dict[TotalStamp, PendingEntry] = {}
        self._delivered_stamps: set[TotalStamp] = set()

    # -- wire-side operations -------------------------------------------------

    def broadcast(self, payload) -> list[Outgoing]:
        """Start broadcasting ``payload``; returns the messages to send.

        Bumps the local scalar clock, snapshots the causal vector into the
        message, inserts the entry into the local pending set, and only then
        advances the own causal entry so that later broadcasts depend on
        this one.
        """
        self.total[self.self_id] += 1
        msg = Tocobc(payload, tuple(self.causal), self.total[self.self_id], self.self_id)
        out = [Outgoing(j, msg) for j in range(self.n) if j != self.self_id]
        self._insert_pending(PendingEntry(payload, msg.s_caus, msg.s_tot, msg.sender))
        self.causal[self.self_id] += 1
        if self.debug_checks:
            self._note_sent(msg.s_tot)
            self._check_invariants()
        return out

    def on_receive_tocobc(self, msg: Tocobc) -> list[Outgoing]:
        """Handle an arriving broadcast message; may emit catch-up messages."""
        if msg.sender == self.self_id:
            raise ContractViolationError("received own broadcast from the network")
        self._insert_pending(PendingEntry(msg.payload, msg.s_caus, msg.s_tot, msg.sender))
        self.total[msg.sender] = msg.s_tot
        out: list[Outgoing] = []
        if self.total[self.self_id] <= msg.s_tot:
            self.total[self.self_id] = msg.s_tot + 1
            cu = CatchUp(self.total[self.self_id], self.self_id)
            out = [Outgoing(j, cu) for j in range(self.n) if j != self.self_id]
            if self.debug_checks:
                self._note_sent(cu.last_date)
        if self.debug_checks:
            self._check_invariants()
        return out

    def on_receive_catch_up(self, msg: CatchUp) -> None:
        self.total[msg.sender] = msg.last_date
        if self.debug_checks:
            self._check_invariants()

    # -- delivery -------------------------------------------------------------

    def deliver_one(self):
        """Deliver the single next stable message, or return None.

        A pending entry must pass three filters: its causal vector must be
        covered by ours, every neighbor of its sender must be known to have
        advanced past its stamp, and no pending message from such a neighbor
        may carry a smaller stamp.  Among survivors the smallest stamp wins.
        """
        ready = [e for e in self.pending if vc_leq(e.s_caus, tuple(self.causal))]
        stable = [
            e
            for e in ready
            if all(
                stamp_less(e.stamp, TotalStamp(self.total[k], k))
                for k in self.graph.neighbors(e.sender)
            )
        ]
        unblocked = [
            e
            for e in stable
            if all(
                stamp_less(e.stamp, f.stamp)
                for f in self.pending
                if f.sender in self.graph.neighbors(e.sender)
            )
        ]
        if not unblocked:
            return None
        entry = min(unblocked, key=lambda e: e.stamp)
        self.pending.remove(entry)
        self.delivered_log.append((entry.payload, entry.stamp))
        if entry.sender != self.self_id:
            self.causal[entry.sender] += 1
        if self.debug_checks:
            self._delivered_stamps.add(entry.stamp)
            self._check_invariants()
        return entry

    def try_deliver(self, on_deliver=None) -> list:
        """Drain every deliverable message, in order; returns their payloads.

        ``on_deliver`` is invoked after each single delivery, before the
        next stability evaluation, so upper layers can react (and even
        broadcast) between deliveries.
        """
        out = []
        while True:
            entry = self.deliver_one()
            if entry is None:
                return out
            out.append(entry.payload)
            if on_deliver is not None:
                on_deliver(entry)

    # -- internals ------------------------------------------------------------

    def _insert_pending(self, entry: PendingEntry) -> None:
        stamp = entry.stamp
        if stamp in self._seen_stamps:
            raise IntegrityError(f"duplicate stamp {stamp} entered the pending set")
        self._seen_stamps.add(stamp)
        self._known[stamp] = entry
        self.pending.append(entry)

    # -- inline invariant checks (debug mode) ----------------------------------

    def _note_sent(self, s_tot: int) -> None:
        if s_tot <= self._last_sent_stot:
            raise ProtocolBugError(
                f"outgoing clock values must strictly increase: {s_tot} after {self._last_sent_stot}"
            )
        self._last_sent_stot = s_tot

    def _check_invariants(self) -> None:
        prev_causal = getattr(self, "_prev_causal", None)
        prev_total = getattr(self, "_prev_total", None)
        if prev_causal is not None and not vc_leq(prev_causal, tuple(self.causal)):
            raise ProtocolBugError(f"causal vector decreased: {prev_causal} -> {self.causal}")
        if prev_total is not None and not vc_leq(prev_total, tuple(self.total)):
            raise ProtocolBugError(f"clock view decreased: {prev_total} -> {self.total}")
        self._prev_causal = tuple(self.causal)
        self._prev_total = tuple(self.total)
        # Coupling between the causal vector and deliveries: a known foreign
        # message is delivered exactly when its sender entry has been passed.
        for stamp, entry in self._known.items():
            j = entry.sender
            if j == self.self_id:
                continue
            delivered = stamp in self._delivered_stamps
            if (entry.s_caus[j] < self.causal[j]) != delivered:
                raise ProtocolBugError(
                    f"delivery/vector coupling broken for {stamp}: "
                    f"s_caus[{j}]={entry.s_caus[j]} causal[{j}]={self.causal[j]} delivered={delivered}"
                )
