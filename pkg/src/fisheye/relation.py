"""Strict partial orders with incremental transitive closure.

Nodes are arbitrary hashable ids.  Reachability is kept as one bitmask per
node, so edge insertion updates closure in O(nodes) word operations and
order queries are O(1).  Sized for histories of a few hundred operations.
"""

from __future__ import annotations


class CycleError(Exception):
    """Raised when an edge insertion would close a cycle."""

    def __init__(self, a, b):
        super().__init__(f"adding {a} -> {b} closes a cycle")
        self.a = a
        self.b = b


class OrderRelation:
    def __init__(self, nodes):
        self.nodes = list(nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise ValueError("duplicate nodes")
        size = len(self.nodes)
        self._succ = [0] * size  # bitmask of strictly-after nodes
        self._pred = [0] * size  # bitmask of strictly-before nodes
        self.direct = [set() for _ in range(size)]  # direct edges, for witnesses

    def copy(self) -> "OrderRelation":
        dup = OrderRelation(self.nodes)
        dup._succ = list(self._succ)
        dup._pred = list(self._pred)
        dup.direct = [set(s) for s in self.direct]
        return dup

    def lt(self, a, b) -> bool:
        """True iff a is strictly ordered before b."""
        return bool(self._succ[self.index[a]] >> self.index[b] & 1)

    def unordered(self, a, b) -> bool:
        return a != b and not self.lt(a, b) and not self.lt(b, a)

    def add_edge(self, a, b) -> bool:
        """Insert a -> b and close transitively; False if already implied."""
        ia, ib = self.index[a], self.index[b]
        if ia == ib or self._succ[ib] >> ia & 1:
            raise CycleError(a, b)
        self.direct[ia].add(ib)
        if self._succ[ia] >> ib & 1:
            return False
        below = self._pred[ia] | (1 << ia)
        above = self._succ[ib] | (1 << ib)
        m = below
        while m:
            low = m & -m
            self._succ[low.bit_length() - 1] |= above
            m ^= low
        m = above
        while m:
            low = m & -m
            self._pred[low.bit_length() - 1] |= below
            m ^= low
        return True

    def after(self, a):
        """All nodes strictly ordered after a."""
        m = self._succ[self.index[a]]
        out = []
        while m:
            low = m & -m
            out.append(self.nodes[low.bit_length() - 1])
            m ^= low
        return out

    def before(self, a):
        m = self._pred[self.index[a]]
        out = []
        while m:
            low = m & -m
            out.append(self.nodes[low.bit_length() - 1])
            m ^= low
        return out

    def edge_count(self) -> int:
        return sum(s.bit_count() for s in self._succ)

    def find_path(self, a, b):
        """One direct-edge path a -> ... -> b, for violation witnesses."""
        ia, ib = self.index[a], self.index[b]
        prev = {ia: None}
        frontier = [ia]
        while frontier:
            nxt = []
            for x in frontier:
                for y in self.direct[x]:
                    if y not in prev:
                        prev[y] = x
                        if y == ib:
                            path = [y]
                            while prev[path[-1]] is not None:
                                path.append(prev[path[-1]])
                            return [self.nodes[i] for i in reversed(path)]
                        nxt.append(y)
            frontier = nxt
        return None
