"""Deterministic discrete-event simulator: FIFO reliable channels, seeded
delays, process programs, quiescence detection.

Virtual time is integer.  Events execute in (time, seq) order where seq is
a global tie-break counter, so equal-time events keep their scheduling
order.  Per-channel delays come from a counter-based keyed hash, which
makes every (scenario, seed) pair reproduce a bit-identical trace no
matter how events interleave.
"""

from __future__ import annotations

import hashlib
import heapq
import struct
from dataclasses import dataclass, field

from .broadcast import BroadcastState
from .core import CatchUp, ProximityGraph, Tocobc, TotalStamp
from .errors import ContractViolationError, LivenessError
from .history import DELIVER, READ, RECV, SEND, WRITE, BroadcastEvent, History, Operation
from .store import BOTTOM, RegisterStore, WriteMessage

# -- program instructions ------------------------------------------------------


@dataclass(frozen=True)
class Write:
    register: str
    value: object


@dataclass(frozen=True)
class Read:
    register: str


@dataclass(frozen=True)
class RepeatReadUntil:
    """Poll a register after every local delivery until it holds ``value``."""

    register: str
    value: object


@dataclass(frozen=True)
class Nop:
    """Local computation time: suspend for ``duration`` virtual time units."""

    duration: int = 1


@dataclass(frozen=True)
class ProcessProgram:
    pid: int
    steps: tuple = ()


@dataclass(frozen=True)
class DelayModel:
    """Uniform integer channel delays, sampled reproducibly per message."""

    seed: int = 0
    min_delay: int = 1
    max_delay: int = 10

    def __post_init__(self):
        if self.min_delay <= 0:
            raise ContractViolationError("min_delay must be > 0")
        if self.max_delay < self.min_delay:
            raise ContractViolationError("max_delay must be >= min_delay")

    def sample(self, src: int, dst: int, index: int) -> int:
        span = self.max_delay - self.min_delay + 1
        raw = hashlib.blake2b(
            struct.pack(">qqqq", self.seed, src, dst, index), digest_size=8
        ).digest()
        return self.min_delay + int.from_bytes(raw, "big") % span


@dataclass(frozen=True)
class Scenario:
    """In-memory run description: who talks to whom, and what each runs."""

    graph: ProximityGraph
    programs: tuple
    delays: DelayModel

    @property
    def n(self):
        return self.graph.n


# -- process status ------------------------------------------------------------

RUNNABLE = "runnable"
WAIT_WRITE = "wait-write"
WAIT_VALUE = "wait-value"
SLEEPING = "sleeping"
DONE = "done"


class _Proc:
    def __init__(self, pid, program, graph, debug_checks):
        self.pid = pid
        self.program = program
        self.bstate = BroadcastState(pid, graph, debug_checks=debug_checks)
        self.store = RegisterStore(pid)
        self.pc = 0
        self.status = RUNNABLE
        self.pending_write_op = None  # Operation invocation awaiting self-delivery


class Simulator:
    """Executes one scenario deterministically and records its history."""

    def __init__(self, scenario: Scenario, debug_checks: bool = False):
        self.scenario = scenario
        self.graph = scenario.graph
        self.n = scenario.n
        self.delays = scenario.delays
        progs = {p.pid: p for p in scenario.programs}
        for pid in progs:
            if not (0 <= pid < self.n):
                raise ContractViolationError(f"program pid {pid} out of range for n={self.n}")
        self.procs = [
            _Proc(pid, progs.get(pid, ProcessProgram(pid)), self.graph, debug_checks)
            for pid in range(self.n)
        ]
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self._last_arrival: dict = {}
        self._send_index: dict = {}
        self._tick = 0
        self.ops: list = []
        self.events: list = []
        self.step_ops: dict = {}  # (pid, step index) -> op_id, for watched reads
        self._next_op_id = 0
        for pid in range(self.n):
            self._push(0, ("resume", pid))

    # -- plumbing ---------------------------------------------------------------

    def _push(self, time, item):
        heapq.heappush(self._queue, (time, self._seq, item))
        self._seq += 1

    def _next_tick(self):
        self._tick += 1
        return self._tick

    def schedule_send(self, src: int, dst: int, msg) -> None:
        """Queue a message arrival honoring per-channel FIFO order."""
        if src == dst:
            raise ContractViolationError("a process does not message itself")
        k = self._send_index.get((src, dst), 0)
        self._send_index[(src, dst)] = k + 1
        arrival = max(self.now + self.delays.sample(src, dst, k),
                      self._last_arrival.get((src, dst), 0))
        self._last_arrival[(src, dst)] = arrival
        self._push(arrival, ("arrival", src, dst, msg))

    def _record_event(self, kind, pid, stamp, op_id):
        self.events.append(BroadcastEvent(self._next_tick(), kind, pid, stamp, op_id))

    # -- event loop ---------------------------------------------------------------

    def step(self) -> bool:
        """Process one queued event; False when the queue is empty."""
        if not self._queue:
            return False
        time, _, item = heapq.heappop(self._queue)
        self.now = time
        if item[0] == "resume":
            proc = self.procs[item[1]]
            if proc.status == SLEEPING:
                proc.status = RUNNABLE
            self._pump(item[1])
        else:
            _, src, dst, msg = item
            self._on_arrival(src, dst, msg)
        return True

    def run_until_quiescence(self) -> History:
        while self.step():
            pass
        stuck = [(p.pid, p.status, p.pc) for p in self.procs if p.status != DONE]
        if stuck:
            raise LivenessError(f"blocked forever at quiescence: {stuck}", stuck=stuck)
        return History(
            n=self.n,
            ops=sorted(self.ops, key=lambda o: o.op_id),
            events=self.events,
            graph=self.graph,
            seed=self.delays.seed,
        )

    # -- dispatch -----------------------------------------------------------------

    def _on_arrival(self, src, dst, msg):
        proc = self.procs[dst]
        if isinstance(msg, Tocobc):
            self._record_event(RECV, dst, msg.stamp, msg.payload.op_id)
            outs = proc.bstate.on_receive_tocobc(msg)
        elif isinstance(msg, CatchUp):
            proc.bstate.on_receive_catch_up(msg)
            outs = []
        else:
            raise ContractViolationError(f"unknown message {msg!r}")
        for out in outs:
            self.schedule_send(dst, out.dest, out.msg)
        self._pump(dst)

    def _pump(self, pid):
        """Deliver and run program steps until this process can't progress."""
        proc = self.procs[pid]
        while True:
            entry = proc.bstate.deliver_one()
            if entry is not None:
                self._handle_delivery(proc, entry)
                self._run_program(proc)
                continue
            if proc.status == RUNNABLE:
                self._run_program(proc)
                if proc.status == RUNNABLE:
                    continue
            break

    def _handle_delivery(self, proc, entry):
        wmsg: WriteMessage = entry.payload
        self._record_event(DELIVER, proc.pid, entry.stamp, wmsg.op_id)
        released = proc.store.on_deliver_write(wmsg)
        if released:
            inv_op = proc.pending_write_op
            done = Operation(inv_op.op_id, inv_op.pid, WRITE, inv_op.register,
                             inv_op.value, inv_op.inv, self._next_tick())
            self.ops[self.ops.index(inv_op)] = done
            proc.pending_write_op = None
            proc.status = RUNNABLE
            proc.pc += 1
        if proc.status == WAIT_VALUE:
            self._poll_until(proc)

    def _poll_until(self, proc):
        step = proc.program.steps[proc.pc]
        if proc.store.read(step.register) == step.value:
            self._record_read(proc, step.register, step.value)
            proc.status = RUNNABLE
            proc.pc += 1

    def _record_read(self, proc, register, value):
        t = self._next_tick()
        op = Operation(self._next_op_id, proc.pid, READ, register, value, t, t)
        self._next_op_id += 1
        self.ops.append(op)
        self.step_ops[(proc.pid, proc.pc)] = op.op_id
        return op

    def _run_program(self, proc):
        """Execute steps eagerly until the program blocks or finishes."""
        while proc.status == RUNNABLE:
            if proc.pc >= len(proc.program.steps):
                proc.status = DONE
                return
            step = proc.program.steps[proc.pc]
            if isinstance(step, Read):
                self._record_read(proc, step.register, proc.store.read(step.register))
                proc.pc += 1
            elif isinstance(step, RepeatReadUntil):
                proc.status = WAIT_VALUE
                self._poll_until(proc)
            elif isinstance(step, Nop):
                proc.status = SLEEPING
                proc.pc += 1
                self._push(self.now + step.duration, ("resume", proc.pid))
                return
            elif isinstance(step, Write):
                op = Operation(self._next_op_id, proc.pid, WRITE, step.register,
                               step.value, self._next_tick(), 0)
                self._next_op_id += 1
                self.ops.append(op)
                self.step_ops[(proc.pid, proc.pc)] = op.op_id
                wmsg = proc.store.begin_write(step.register, step.value, op.op_id)
                outs = proc.bstate.broadcast(wmsg)
                stamp = TotalStamp(proc.bstate.total[proc.pid], proc.pid)
                self._record_event(SEND, proc.pid, stamp, op.op_id)
                for out in outs:
                    self.schedule_send(proc.pid, out.dest, out.msg)
                proc.pending_write_op = op
                proc.status = WAIT_WRITE
                return
            else:
                raise ContractViolationError(f"unknown instruction {step!r}")


def run_scenario(scenario: Scenario, seed=None, debug_checks: bool = False) -> History:
    """Run a scenario to quiescence, optionally overriding the delay seed."""
    if seed is not None:
        scenario = Scenario(
            scenario.graph,
            scenario.programs,
            DelayModel(seed, scenario.delays.min_delay, scenario.delays.max_delay),
        )
    return Simulator(scenario, debug_checks=debug_checks).run_until_quiescence()
