"""Checkers for recorded histories.

Two layers live here:

* broadcast-level verification (validity, integrity, agreed neighbor
  delivery order, causal order, termination) straight from the recorded
  send/deliver events, and
* register-level consistency checking, which decides whether a history is
  causally consistent, sequentially consistent, or consistent under an
  arbitrary proximity graph.

The register checker builds an explicit witness.  Starting from process
order plus read-from links it derives the base causal order, checks that
no read returns an overwritten value, then orders the operations of
neighboring processes in three waves: unordered neighbor write pairs take
the direction of the recorded global delivery order (ww links); reads get
ordered before any neighbor write that follows their source (rw links);
and every remaining neighbor read/write pair is ordered read first (r-rw
links).  Acyclicity and read legality are re-checked after every wave.
Finally each process receives a legal sequential view of its own
operations plus all writes, found by a legality-aware topological sort.

Histories that carry no broadcast events (hand-written or generated ones)
cannot pin the ww directions, so the checker falls back to searching over
the possible orientations, which keeps its verdicts aligned with the
definitional brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ProximityGraph
from .errors import MalformedHistoryError, ProtocolBugError, SizeCapExceededError
from .history import DELIVER, SEND, History, Operation
from .relation import CycleError, OrderRelation
from .store import BOTTOM

BOTTOM_NODE = "bottom"

# Orientation search refuses event-less histories with more unordered
# neighbor write pairs than this.
WW_SEARCH_CAP = 20

# Safety valve for the witness backtracking search.
MAX_SORT_STATES = 500_000


@dataclass
class Verdict:
    accepted: bool
    reason: str = ""
    details: dict = field(default_factory=dict)
    witness: dict | None = None  # pid -> list of op ids, on acceptance

    def __bool__(self):
        return self.accepted


class Rejection(Exception):
    """Internal control flow: a checker stage found a violation."""

    def __init__(self, reason, **details):
        super().__init__(reason)
        self.reason = reason
        self.details = details

    def verdict(self) -> Verdict:
        return Verdict(False, self.reason, self.details)


# -- message-level checking ------------------------------------------------------


def build_message_causal_order(history: History) -> OrderRelation:
    """Happened-before over broadcast messages, transitively closed.

    A message precedes another when the same process sent both in that
    order, or when some process delivered the first before sending the
    second.
    """
    sends = [e for e in history.events if e.kind == SEND]
    rel = OrderRelation([e.stamp for e in sends])
    try:
        by_sender: dict = {}
        for e in sends:
            by_sender.setdefault(e.pid, []).append(e.stamp)
        for stamps in by_sender.values():
            for a, b in zip(stamps, stamps[1:]):
                rel.add_edge(a, b)
        for pid in range(history.n):
            delivered = []
            for e in sorted(history.events, key=lambda e: e.seq):
                if e.pid != pid:
                    continue
                if e.kind == DELIVER:
                    delivered.append(e.stamp)
                elif e.kind == SEND:
                    for m in delivered:
                        if m != e.stamp:
                            rel.add_edge(m, e.stamp)
    except CycleError as exc:
        raise MalformedHistoryError(
            f"message causality is cyclic around {exc.a} -> {exc.b}"
        ) from exc
    return rel


def check_broadcast_properties(history: History, g: ProximityGraph) -> Verdict:
    """Verify the five delivery guarantees on a quiescent run's events."""
    failures = []
    sent = history.sent_stamps()
    orders = {pid: history.delivery_order(pid) for pid in range(history.n)}

    for pid, order in orders.items():
        for stamp in order:
            if stamp not in sent:
                failures.append(("validity", f"p{pid} delivered unsent message {stamp}"))
        dup = {s for s in order if order.count(s) > 1}
        for stamp in sorted(dup):
            failures.append(("integrity", f"p{pid} delivered {stamp} more than once"))

    for stamp in sent:
        for pid, order in orders.items():
            if stamp not in order:
                failures.append(("termination", f"{stamp} never delivered by p{pid}"))

    causal = build_message_causal_order(history)
    pos = {pid: {s: i for i, s in enumerate(order)} for pid, order in orders.items()}
    for m1 in causal.nodes:
        for m2 in causal.after(m1):
            for pid in range(history.n):
                p = pos[pid]
                if m1 in p and m2 in p and p[m2] < p[m1]:
                    failures.append(
                        ("causal-order", f"p{pid} delivered {m2} before its cause {m1}")
                    )

    for a, b in sorted(g.edges):
        msgs_a = [s for s in sent if s.pid == a]
        msgs_b = [s for s in sent if s.pid == b]
        for ma in msgs_a:
            for mb in msgs_b:
                seen = set()
                for pid in range(history.n):
                    p = pos[pid]
                    if ma in p and mb in p:
                        seen.add(p[ma] < p[mb])
                if len(seen) > 1:
                    failures.append(
                        ("g-delivery-order",
                         f"processes disagree on the order of {ma} and {mb} "
                         f"from neighbors p{a}, p{b}")
                    )

    if failures:
        return Verdict(False, failures[0][1], {"failures": failures})
    return Verdict(True, "all broadcast properties hold")


# -- base causal order over operations --------------------------------------------


def _op_map(history: History) -> dict:
    return {o.op_id: o for o in history.ops}


def build_read_from(history: History) -> OrderRelation:
    """Process order plus read-from links, transitively closed.

    Reads of the absent value hang off a synthetic bottom node.  A cycle
    means some write message would have been received before it was sent.
    """
    history.validate()
    rel = OrderRelation([o.op_id for o in history.ops] + [BOTTOM_NODE])
    try:
        for pid in range(history.n):
            chain = history.ops_of(pid)
            for a, b in zip(chain, chain[1:]):
                rel.add_edge(a.op_id, b.op_id)
        for r in history.reads():
            src = history.source_write(r)
            rel.add_edge(src.op_id if src is not None else BOTTOM_NODE, r.op_id)
    except CycleError as exc:
        raise Rejection(
            "read-from and process order are cyclic: "
            f"a message was received before it was sent ({exc.a} -> {exc.b})",
            cycle=(exc.a, exc.b),
        ) from exc
    return rel


def _causality_violation(rel: OrderRelation, history: History):
    """First read that returns an overwritten value, or None."""
    writes_by_reg: dict = {}
    for w in history.writes():
        writes_by_reg.setdefault(w.register, []).append(w)
    for r in sorted(history.reads(), key=lambda o: o.op_id):
        src = history.source_write(r)
        for w2 in writes_by_reg.get(r.register, []):
            if src is None:
                if rel.lt(w2.op_id, r.op_id):
                    return r, None, w2
            elif w2.op_id != src.op_id:
                if rel.lt(src.op_id, w2.op_id) and rel.lt(w2.op_id, r.op_id):
                    return r, src, w2
    return None


def check_causal_legality(rel: OrderRelation, history: History) -> Verdict:
    """Accept iff no read is separated from its source write by another write."""
    hit = _causality_violation(rel, history)
    if hit is None:
        return Verdict(True, "order is causal")
    r, src, w2 = hit
    if src is None:
        return Verdict(False, f"{r} returns the initial value but {w2} precedes it",
                       {"read": r.op_id, "interposed": w2.op_id})
    return Verdict(False, f"{r} reads {src} but {w2} is ordered in between",
                   {"read": r.op_id, "source": src.op_id, "interposed": w2.op_id})


# -- neighbor-pair ordering waves --------------------------------------------------


def _unordered_neighbor_write_pairs(rel, history, g):
    pairs = []
    writes = sorted(history.writes(), key=lambda o: o.op_id)
    for i, a in enumerate(writes):
        for b in writes[i + 1:]:
            if g.has_edge(a.pid, b.pid) and rel.unordered(a.op_id, b.op_id):
                pairs.append((a, b))
    return pairs


def _delivered_before_by_all(history, stamp_a, stamp_b):
    verdicts = set()
    for pid in range(history.n):
        order = history.delivery_order(pid)
        if stamp_a not in order or stamp_b not in order:
            return None
        verdicts.add(order.index(stamp_a) < order.index(stamp_b))
    if len(verdicts) != 1:
        return None
    return verdicts.pop()


def extend_ww(rel: OrderRelation, history: History, g: ProximityGraph) -> OrderRelation:
    """Order unordered neighbor write pairs by the recorded delivery order."""
    out = rel.copy()
    for a, b in _unordered_neighbor_write_pairs(rel, history, g):
        sa, sb = history.write_stamp(a.op_id), history.write_stamp(b.op_id)
        if sa is None or sb is None:
            raise Rejection(
                f"no broadcast recorded for write pair {a}, {b}; "
                "cannot derive their agreed order", pair=(a.op_id, b.op_id))
        before = _delivered_before_by_all(history, sa, sb)
        if before is None:
            raise Rejection(
                f"processes do not agree on the delivery order of {a} and {b}",
                pair=(a.op_id, b.op_id))
        try:
            out.add_edge(a.op_id if before else b.op_id,
                         b.op_id if before else a.op_id)
        except CycleError as exc:
            raise Rejection(
                f"delivery order of neighbor writes contradicts causality "
                f"({exc.a} -> {exc.b} closes a cycle)", cycle=(exc.a, exc.b)) from exc
    _recheck(out, history, "neighbor write ordering")
    return out


def _extend_ww_oriented(rel, pairs, orientation):
    """Search-mode variant: apply an explicit direction per write pair."""
    out = rel.copy()
    for (a, b), a_first in zip(pairs, orientation):
        if out.unordered(a.op_id, b.op_id):
            out.add_edge(a.op_id if a_first else b.op_id,
                         b.op_id if a_first else a.op_id)
        elif out.lt(a.op_id, b.op_id) != a_first:
            raise CycleError(a.op_id, b.op_id)
    return out


def _rw_scan(rel, history, g, require_source_before):
    """One fixpoint wave adding read -> write edges over neighbor pairs."""
    out = rel.copy()
    reads = sorted(history.reads(), key=lambda o: o.op_id)
    writes = sorted(history.writes(), key=lambda o: o.op_id)
    sources = {r.op_id: history.source_write(r) for r in reads}
    changed = True
    while changed:
        changed = False
        for r in reads:
            for w in writes:
                if not g.has_edge(r.pid, w.pid):
                    continue
                if not out.unordered(r.op_id, w.op_id):
                    continue
                if require_source_before:
                    src = sources[r.op_id]
                    # Reads of the initial value have no source write, so
                    # nothing pins their direction here; the residual wave
                    # orders them.
                    if src is None or not out.lt(src.op_id, w.op_id):
                        continue
                out.add_edge(r.op_id, w.op_id)
                changed = True
    return out


def extend_rw_links(rel: OrderRelation, history: History, g: ProximityGraph) -> OrderRelation:
    """Order each neighbor read before any write that follows the read's source."""
    out = _rw_scan(rel, history, g, require_source_before=True)
    _recheck(out, history, "read protection")
    return out


def extend_r_rw_links(rel: OrderRelation, history: History, g: ProximityGraph) -> OrderRelation:
    """Order every remaining unordered neighbor read/write pair, read first."""
    out = _rw_scan(rel, history, g, require_source_before=False)
    _recheck(out, history, "residual read/write ordering")
    for a, b in _unordered_neighbor_write_pairs(out, history, g):
        raise ProtocolBugError(f"neighbor writes {a}, {b} still unordered after all waves")
    return out


def _recheck(rel, history, stage):
    hit = _causality_violation(rel, history)
    if hit is not None:
        r, src, w2 = hit
        raise Rejection(
            f"{stage} makes {r} return an overwritten value ({w2} interposes)",
            read=r.op_id, interposed=w2.op_id, stage=stage)


# -- witness construction -----------------------------------------------------------


def _force_legality_edges(rel, subset, sources):
    """Add the orderings every legal extension of ``subset`` must satisfy.

    For a read r with source u on register X and another X-write w in the
    subset: if u precedes w then r must too (else w buries u before r),
    and if w precedes r then w must precede u as well.  Reads of the
    absent value must precede every X-write.  Returns the augmented copy,
    or None when the constraints are contradictory.
    """
    out = rel.copy()
    ids = {o.op_id for o in subset}
    by_reg: dict = {}
    read_reg: dict = {}
    for o in subset:
        if o.is_write():
            by_reg.setdefault(o.register, []).append(o.op_id)
        elif o.op_id in sources:
            read_reg[o.op_id] = o.register
    changed = True
    while changed:
        changed = False
        for r_id, src in sources.items():
            for w in by_reg.get(read_reg[r_id], []):
                if w == src or w not in ids:
                    continue
                try:
                    if src is None:
                        if out.lt(w, r_id):
                            return None
                        if not out.lt(r_id, w):
                            out.add_edge(r_id, w)
                            changed = True
                    elif out.lt(src, w) and not out.lt(r_id, w):
                        if out.lt(w, r_id):
                            return None
                        out.add_edge(r_id, w)
                        changed = True
                    elif out.lt(w, r_id) and not out.lt(w, src):
                        if out.lt(src, w):
                            return None
                        out.add_edge(w, src)
                        changed = True
                except CycleError:
                    return None
    return out


def legal_extension(rel: OrderRelation, subset: list, history: History):
    """One legal linear extension of rel restricted to ``subset``, or None.

    Backtracking topological sort that only emits a read when its source
    write is the register's latest emitted write, preferring reads and
    writes that cannot poison a waiting read.  Failed frontiers are
    memoized, so the search is exhaustive but never revisits a state.
    """
    ops = {o.op_id: o for o in subset}
    ids = list(ops)
    sources = {
        o.op_id: (history.source_write(o).op_id
                  if history.source_write(o) is not None else None)
        for o in subset if o.is_read()
    }
    rel = _force_legality_edges(rel, subset, sources)
    if rel is None:
        return None
    preds = {
        i: [p for p in rel.before(i) if p in ops]
        for i in ids
    }
    failed: set = set()
    emitted: list = []
    emitted_set: set = set()
    last_write: dict = {}
    states = 0

    def candidates():
        avail = [i for i in ids if i not in emitted_set
                 and all(p in emitted_set for p in preds[i])]
        legal_reads, safe_writes, other_writes = [], [], []
        # Registers some pending read already depends on: writing them now
        # would bury that read's source.
        poisoned_regs = {
            ops[r].register for r in sources
            if r not in emitted_set and (sources[r] is None or sources[r] in emitted_set)
        }
        for i in avail:
            o = ops[i]
            if o.is_read():
                if last_write.get(o.register) == sources[i]:
                    legal_reads.append(i)
            else:
                (other_writes if o.register in poisoned_regs else safe_writes).append(i)
        return legal_reads + safe_writes + other_writes

    def search():
        nonlocal states
        if len(emitted) == len(ids):
            return True
        # The reachable continuations depend on what was emitted plus each
        # register's latest write, not on the emission order itself.
        key = (frozenset(emitted_set), tuple(sorted(last_write.items())))
        if key in failed:
            return False
        states += 1
        if states > MAX_SORT_STATES:
            raise ProtocolBugError("witness search exceeded its state budget")
        for i in candidates():
            o = ops[i]
            emitted.append(i)
            emitted_set.add(i)
            saved = last_write.get(o.register)
            if o.is_write():
                last_write[o.register] = i
            if search():
                return True
            if o.is_write():
                if saved is None:
                    last_write.pop(o.register, None)
                else:
                    last_write[o.register] = saved
            emitted_set.discard(i)
            emitted.pop()
        failed.add(key)
        return False

    if search():
        return list(emitted)
    return None


def build_witnesses(rel: OrderRelation, history: History):
    """Per-process legal sequential views (own ops plus all writes)."""
    witness = {}
    for pid in range(history.n):
        subset_ids = {o.op_id for o in history.ops_of(pid)}
        subset_ids.update(o.op_id for o in history.writes())
        subset = [o for o in history.ops if o.op_id in subset_ids]
        seq = legal_extension(rel, subset, history)
        if seq is None:
            raise Rejection(
                f"no legal sequential view exists for p{pid}", pid=pid)
        witness[pid] = seq
    return witness


def validate_witness(history: History, verdict: Verdict,
                     rel: OrderRelation | None = None) -> None:
    """Independently re-check an accepting verdict's witness sequences."""
    if not verdict.accepted or verdict.witness is None:
        raise ProtocolBugError("no witness to validate")
    ops = _op_map(history)
    for pid, seq in verdict.witness.items():
        in_seq = set(seq)
        expect = {o.op_id for o in history.ops_of(pid)}
        expect.update(o.op_id for o in history.writes())
        if in_seq != expect or len(seq) != len(expect):
            raise ProtocolBugError(f"witness for p{pid} has the wrong operation set")
        values: dict = {}
        for i in seq:
            o = ops[i]
            if o.is_write():
                values[o.register] = o.value
            elif values.get(o.register, BOTTOM) != o.value:
                raise ProtocolBugError(f"witness for p{pid} is not legal at {o}")
        for q in range(history.n):
            chain = [i for i in seq if ops[i].pid == q]
            ref = [o.op_id for o in history.ops_of(q) if o.op_id in in_seq]
            if chain != ref:
                raise ProtocolBugError(
                    f"witness for p{pid} breaks the process order of p{q}")
        if rel is not None:
            position = {i: k for k, i in enumerate(seq)}
            for i in seq:
                for j in rel.after(i):
                    if j in position and position[j] < position[i]:
                        raise ProtocolBugError(
                            f"witness for p{pid} contradicts the constructed order")


# -- the full register-level checker -------------------------------------------------


def _residual_pair(rel, history, g):
    """First unordered neighbor read/write pair, scanning by op id."""
    reads = sorted(history.reads(), key=lambda o: o.op_id)
    writes = sorted(history.writes(), key=lambda o: o.op_id)
    for r in reads:
        for w in writes:
            if g.has_edge(r.pid, w.pid) and rel.unordered(r.op_id, w.op_id):
                return r, w
    return None


def _search_residuals(rel, history, g, leaf):
    """Try every orientation of the remaining neighbor read/write pairs.

    Ordering a residual pair read-first is usually enough, but through
    cross-register chains it can force a read elsewhere to return an
    overwritten value while the opposite direction would not; both
    directions are therefore explored, read-first preferred, pruning any
    branch that already breaks legality.
    """
    pair = _residual_pair(rel, history, g)
    if pair is None:
        return leaf(rel)
    r, w = pair
    for a, b in ((r.op_id, w.op_id), (w.op_id, r.op_id)):
        cand = rel.copy()
        cand.add_edge(a, b)
        if _causality_violation(cand, history) is not None:
            continue
        got = _search_residuals(cand, history, g, leaf)
        if got is not None:
            return got
    return None


def _pipeline_from(rel, history, g):
    """Complete an order whose neighbor writes are settled; build witnesses."""
    rel = extend_rw_links(rel, history, g)

    def leaf(final):
        try:
            return final, build_witnesses(final, history)
        except Rejection:
            return None

    got = _search_residuals(rel, history, g, leaf)
    if got is None:
        raise Rejection("no ordering of neighbor operations admits "
                        "legal sequential views for every process")
    return got


def check_fisheye(history: History, g: ProximityGraph) -> Verdict:
    """Decide consistency of a history under a proximity graph.

    The empty graph yields the causal-consistency check and the complete
    graph the sequential-consistency check.
    """
    if g.n != history.n:
        raise MalformedHistoryError(f"graph is over {g.n} processes, history over {history.n}")
    try:
        rel = build_read_from(history)
    except Rejection as rej:
        return rej.verdict()
    base = check_causal_legality(rel, history)
    if not base.accepted:
        return base

    if history.has_events():
        try:
            rel = extend_ww(rel, history, g)
            rel, witness = _pipeline_from(rel, history, g)
        except Rejection as rej:
            return rej.verdict()
        v = Verdict(True, "history is consistent under the given graph", witness=witness)
        validate_witness(history, v, rel)
        return v

    # No recorded delivery orders: search the write-pair orientations.
    pairs = _unordered_neighbor_write_pairs(rel, history, g)
    if len(pairs) > WW_SEARCH_CAP:
        raise SizeCapExceededError(
            f"{len(pairs)} unordered neighbor write pairs exceed the search cap "
            f"({WW_SEARCH_CAP}); record broadcast events to pin their order")
    reason = "no orientation of neighbor writes yields a consistent view"
    details: dict = {}

    def attempt(prefix):
        nonlocal reason, details
        if len(prefix) < len(pairs):
            for direction in (True, False):
                try:
                    cand = _extend_ww_oriented(rel, pairs[: len(prefix) + 1],
                                               prefix + [direction])
                except CycleError:
                    continue
                if _causality_violation(cand, history) is not None:
                    continue
                got = attempt(prefix + [direction])
                if got is not None:
                    return got
            return None
        try:
            cand = _extend_ww_oriented(rel, pairs, prefix)
            return _pipeline_from(cand, history, g)
        except (Rejection, CycleError) as rej:
            if isinstance(rej, Rejection):
                reason, details = rej.reason, rej.details
            return None

    got = attempt([])
    if got is None:
        return Verdict(False, reason, details)
    final_rel, witness = got
    v = Verdict(True, "history is consistent under the given graph", witness=witness)
    validate_witness(history, v, final_rel)
    return v


def check_cc(history: History) -> Verdict:
    return check_fisheye(history, ProximityGraph.empty(history.n))


def check_sc(history: History) -> Verdict:
    return check_fisheye(history, ProximityGraph.complete(history.n))
