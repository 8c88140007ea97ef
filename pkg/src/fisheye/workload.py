"""Seeded random scenarios for property testing the full stack.

Each seed maps to one scenario: a process count, a proximity graph (empty,
complete, or random), and per-process programs mixing writes of uniquely
tagged values, plain reads, and think-time pauses.  Values are tagged
``writer.counter`` so every checked history has distinct written values.
"""

from __future__ import annotations

import random

from .core import ProximityGraph
from .sim import DelayModel, Nop, ProcessProgram, Read, Scenario, Write


def random_graph(rng: random.Random, n: int) -> ProximityGraph:
    kind = rng.randrange(4)
    if kind == 0:
        return ProximityGraph.empty(n)
    if kind == 1:
        return ProximityGraph.complete(n)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5]
    return ProximityGraph.of(n, pairs)


def random_scenario(seed: int, *, n_min=2, n_max=6, max_broadcasts=40,
                    registers=("A", "B", "C"), graph: ProximityGraph | None = None,
                    with_reads=True) -> Scenario:
    rng = random.Random(seed)
    n = rng.randint(n_min, n_max)
    if graph is None:
        g = random_graph(rng, n)
    else:
        g = graph
        n = g.n
    budget = rng.randint(n, max_broadcasts)
    quota = [0] * n
    for _ in range(budget):
        quota[rng.randrange(n)] += 1
    programs = []
    for pid in range(n):
        steps = []
        for k in range(quota[pid]):
            if with_reads and rng.random() < 0.3:
                steps.append(Read(rng.choice(registers)))
            if rng.random() < 0.4:
                steps.append(Nop(rng.randint(1, 8)))
            steps.append(Write(rng.choice(registers), f"{pid}.{k}"))
        if with_reads and rng.random() < 0.5:
            steps.append(Read(rng.choice(registers)))
        programs.append(ProcessProgram(pid, tuple(steps)))
    return Scenario(g, tuple(programs), DelayModel(seed=seed, min_delay=1, max_delay=10))
