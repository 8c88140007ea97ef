"""Line-oriented text formats for scenarios and recorded histories.

Both formats carry a versioned header, fixed field order, and decimal
integers, so golden files diff cleanly.  Values are single tokens: ``bot``
is the absent value, an all-digit token is an integer, anything else is an
opaque string.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import ProximityGraph, TotalStamp
from .errors import FisheyeError
from .history import BroadcastEvent, History, Operation, READ, WRITE
from .sim import DelayModel, Nop, ProcessProgram, Read, RepeatReadUntil, Scenario, Write
from .store import BOTTOM

SCENARIO_MAGIC = "fisheye-scenario v1"
HISTORY_MAGIC = "fisheye-history v1"

_INT = re.compile(r"^-?\d+$")


class ParseError(FisheyeError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def encode_value(v) -> str:
    if v is BOTTOM:
        return "bot"
    return str(v)


def decode_value(tok: str):
    if tok == "bot":
        return BOTTOM
    if _INT.match(tok):
        return int(tok)
    return tok


def _encode_graph(g: ProximityGraph) -> str:
    if not g.edges:
        return "empty"
    return " ".join(f"{a}-{b}" for a, b in sorted(g.edges))


def _decode_graph(tokens, n, lineno) -> ProximityGraph:
    if tokens == ["empty"]:
        return ProximityGraph.empty(n)
    if tokens == ["complete"]:
        return ProximityGraph.complete(n)
    pairs = []
    for t in tokens:
        m = re.match(r"^(\d+)-(\d+)$", t)
        if not m:
            raise ParseError(lineno, f"bad graph edge {t!r}")
        pairs.append((int(m.group(1)), int(m.group(2))))
    try:
        return ProximityGraph.of(n, pairs)
    except FisheyeError as exc:
        raise ParseError(lineno, str(exc)) from exc


def parse_graph_spec(spec: str, n: int) -> ProximityGraph:
    """Parse a command-line graph: 'empty', 'complete', or '0-1,2-3'."""
    return _decode_graph(spec.replace(",", " ").split(), n, 0)


@dataclass
class ScenarioFile:
    """A parsed scenario plus its presentation metadata."""

    scenario: Scenario
    names: dict = field(default_factory=dict)
    watches: list = field(default_factory=list)  # (label, pid, step index)
    allows: dict = field(default_factory=dict)  # label -> list of allowed values


def parse_scenario(text: str) -> ScenarioFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCENARIO_MAGIC:
        raise ParseError(1, f"expected header {SCENARIO_MAGIC!r}")
    n = None
    graph = None
    seed = 0
    dmin, dmax = 1, 10
    names: dict = {}
    steps: dict = {}
    watches: list = []
    allows: dict = {}

    def need_n(lineno):
        if n is None:
            raise ParseError(lineno, "n must be declared first")

    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        try:
            if key == "n":
                n = int(tok[1])
                if n < 1:
                    raise ParseError(lineno, "n must be >= 1")
            elif key == "graph":
                need_n(lineno)
                graph = _decode_graph(tok[1:], n, lineno)
            elif key == "delays":
                if tok[1] != "min" or tok[3] != "max":
                    raise ParseError(lineno, "expected: delays min A max B")
                dmin, dmax = int(tok[2]), int(tok[4])
            elif key == "seed":
                seed = int(tok[1])
            elif key == "name":
                need_n(lineno)
                names[int(tok[1])] = tok[2]
            elif key == "prog":
                need_n(lineno)
                pid = int(tok[1])
                if not (0 <= pid < n):
                    raise ParseError(lineno, f"pid {pid} out of range for n={n}")
                verb = tok[2]
                if verb == "write":
                    step = Write(tok[3], decode_value(tok[4]))
                elif verb == "read":
                    step = Read(tok[3])
                elif verb == "until":
                    step = RepeatReadUntil(tok[3], decode_value(tok[4]))
                elif verb == "nop":
                    step = Nop(int(tok[3]) if len(tok) > 3 else 1)
                else:
                    raise ParseError(lineno, f"unknown instruction {verb!r}")
                steps.setdefault(pid, []).append(step)
            elif key == "watch":
                watches.append((tok[1], int(tok[2]), int(tok[3])))
            elif key == "allow":
                allows[tok[1]] = [decode_value(t) for t in tok[2:]]
            else:
                raise ParseError(lineno, f"unknown directive {key!r}")
        except (IndexError, ValueError) as exc:
            raise ParseError(lineno, f"malformed {key!r} line: {exc}") from exc

    if n is None:
        raise ParseError(len(lines), "missing n declaration")
    if graph is None:
        graph = ProximityGraph.empty(n)
    for label, pid, step in watches:
        if not (0 <= pid < n) or step >= len(steps.get(pid, [])):
            raise ParseError(0, f"watch {label!r} points at missing step ({pid},{step})")
    programs = tuple(ProcessProgram(pid, tuple(steps.get(pid, []))) for pid in range(n))
    scenario = Scenario(graph, programs, DelayModel(seed, dmin, dmax))
    return ScenarioFile(scenario, names, watches, allows)


def load_scenario(path: str) -> ScenarioFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- history files -----------------------------------------------------------------


def emit_history(history: History) -> str:
    out = [HISTORY_MAGIC, f"n {history.n}"]
    if history.seed is not None:
        out.append(f"seed {history.seed}")
    if history.graph is not None:
        out.append(f"graph {_encode_graph(history.graph)}")
    for o in sorted(history.ops, key=lambda o: o.op_id):
        out.append(
            f"op {o.op_id} pid {o.pid} {o.kind} {o.register} "
            f"{encode_value(o.value)} inv {o.inv} res {o.res}"
        )
    for e in sorted(history.events, key=lambda e: e.seq):
        out.append(f"ev {e.seq} {e.kind} {e.pid} {e.stamp.time}:{e.stamp.pid} {e.op_id}")
    return "\n".join(out) + "\n"


def parse_history(text: str) -> History:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HISTORY_MAGIC:
        raise ParseError(1, f"expected header {HISTORY_MAGIC!r}")
    n = None
    seed = None
    graph = None
    ops = []
    events = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        try:
            if key == "n":
                n = int(tok[1])
            elif key == "seed":
                seed = int(tok[1])
            elif key == "graph":
                if n is None:
                    raise ParseError(lineno, "n must precede graph")
                graph = _decode_graph(tok[1:], n, lineno)
            elif key == "op":
                if tok[2] != "pid" or tok[7] != "inv" or tok[9] != "res":
                    raise ParseError(lineno, "malformed op record")
                kind = tok[4]
                if kind not in (READ, WRITE):
                    raise ParseError(lineno, f"unknown op kind {kind!r}")
                ops.append(Operation(int(tok[1]), int(tok[3]), kind, tok[5],
                                     decode_value(tok[6]), int(tok[8]), int(tok[10])))
            elif key == "ev":
                t, p = tok[4].split(":")
                events.append(BroadcastEvent(int(tok[1]), tok[2], int(tok[3]),
                                             TotalStamp(int(t), int(p)), int(tok[5])))
            else:
                raise ParseError(lineno, f"unknown directive {key!r}")
        except (IndexError, ValueError) as exc:
            raise ParseError(lineno, f"malformed {key!r} line: {exc}") from exc
    if n is None:
        raise ParseError(len(lines), "missing n declaration")
    return History(n=n, ops=ops, events=events, graph=graph, seed=seed)


def load_history(path: str) -> History:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_history(fh.read())
