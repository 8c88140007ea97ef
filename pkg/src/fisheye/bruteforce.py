"""Definitional consistency oracle for small histories.

Decides consistency straight from the definition, with no reliance on
recorded delivery orders: take the closure of process order and read-from
links, then search every way of orienting the still-unordered neighbor
pairs that involve a write; a history is consistent when some orientation
gives every process a legal sequential view of its own operations plus all
writes.  Orientation branches whose order already forces a read to return
an overwritten value are pruned, since no sequential view can exist past
that point.

Exponential in the worst case, so inputs are capped; the graph-based
checker must agree with this oracle wherever the oracle applies.
"""

from __future__ import annotations

from .checker import (
    Rejection,
    Verdict,
    _causality_violation,
    build_read_from,
    check_causal_legality,
    legal_extension,
)
from .core import ProximityGraph
from .errors import SizeCapExceededError
from .history import History
from .relation import CycleError

OP_CAP = 10


def _open_neighbor_pairs(rel, history, g):
    """Unordered neighbor op pairs with at least one write, by op id."""
    pairs = []
    ops = sorted(history.ops, key=lambda o: o.op_id)
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            if a.is_read() and b.is_read():
                continue
            if g.has_edge(a.pid, b.pid) and rel.unordered(a.op_id, b.op_id):
                pairs.append((a.op_id, b.op_id))
    return pairs


def _all_views_exist(rel, history):
    for pid in range(history.n):
        subset_ids = {o.op_id for o in history.ops_of(pid)}
        subset_ids.update(o.op_id for o in history.writes())
        subset = [o for o in history.ops if o.op_id in subset_ids]
        if legal_extension(rel, subset, history) is None:
            return False
    return True


def brute_force_check(history: History, g: ProximityGraph) -> Verdict:
    """Accept iff some subsuming order satisfies the definition outright."""
    if len(history.ops) > OP_CAP:
        raise SizeCapExceededError(
            f"{len(history.ops)} operations exceed the oracle cap of {OP_CAP}")
    try:
        rel = build_read_from(history)
    except Rejection as rej:
        return rej.verdict()
    base = check_causal_legality(rel, history)
    if not base.accepted:
        return base

    def search(current):
        open_pairs = _open_neighbor_pairs(current, history, g)
        if not open_pairs:
            return _all_views_exist(current, history)
        a, b = open_pairs[0]
        for first, second in ((a, b), (b, a)):
            cand = current.copy()
            try:
                cand.add_edge(first, second)
            except CycleError:
                continue
            if _causality_violation(cand, history) is not None:
                continue
            if search(cand):
                return True
        return False

    if search(rel):
        return Verdict(True, "a subsuming order with legal views exists")
    return Verdict(False, "no subsuming order admits legal sequential views")
