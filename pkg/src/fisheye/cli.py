"""Command-line front end: run scenarios, check histories, sweep seeds.

Exit codes: 0 success/accepted, 1 rejected or outside the allowed set,
2 parse or usage error, 3 liveness failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bruteforce import brute_force_check
from .checker import check_broadcast_properties, check_fisheye
from .core import ProximityGraph
from .errors import FisheyeError, LivenessError, MalformedHistoryError
from .scenario import (
    ParseError,
    emit_history,
    load_history,
    load_scenario,
    parse_graph_spec,
    encode_value,
)
from .sim import Simulator, run_scenario

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_LIVENESS = 3


def _emit(args, payload, text_lines):
    if args.report == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def cmd_run(args) -> int:
    sf = load_scenario(args.scenario)
    try:
        history = run_scenario(sf.scenario, seed=args.seed, debug_checks=args.debug_checks)
    except LivenessError as exc:
        _emit(args, {"status": "deadlock", "stuck": exc.stuck},
              [f"liveness failure: {exc}"])
        return EXIT_LIVENESS
    text = emit_history(history)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.output:
        _emit(args, {"status": "ok", "ops": len(history.ops),
                     "events": len(history.events), "output": args.output},
              [f"quiescent: {len(history.ops)} ops, {len(history.events)} events "
               f"-> {args.output}"])
    return EXIT_OK


def _resolve_graph(args, history):
    if args.condition == "cc":
        return ProximityGraph.empty(history.n)
    if args.condition == "sc":
        return ProximityGraph.complete(history.n)
    if args.graph:
        return parse_graph_spec(args.graph, history.n)
    if history.graph is not None:
        return history.graph
    raise MalformedHistoryError(
        "history carries no graph; pass --graph for the fisheye condition")


def cmd_check(args) -> int:
    history = load_history(args.history)
    graph = _resolve_graph(args, history)
    checker = brute_force_check if args.oracle else check_fisheye
    verdict = checker(history, graph)
    broadcast = None
    if args.broadcast_properties:
        broadcast = check_broadcast_properties(history, graph)
    payload = {
        "condition": args.condition,
        "accepted": verdict.accepted,
        "reason": verdict.reason,
        "witness": verdict.witness,
    }
    lines = [f"{'accepted' if verdict.accepted else 'rejected'} ({args.condition}): "
             f"{verdict.reason}"]
    if verdict.accepted and verdict.witness is not None:
        for pid in sorted(verdict.witness):
            lines.append(f"  view p{pid}: {' '.join(map(str, verdict.witness[pid]))}")
    if broadcast is not None:
        payload["broadcast_properties"] = {
            "accepted": broadcast.accepted,
            "failures": broadcast.details.get("failures", []),
        }
        lines.append(f"broadcast properties: "
                     f"{'ok' if broadcast.accepted else broadcast.reason}")
    _emit(args, payload, lines)
    ok = verdict.accepted and (broadcast is None or broadcast.accepted)
    return EXIT_OK if ok else EXIT_REJECTED


def _parse_seed_range(spec: str):
    if ".." in spec:
        a, b = spec.split("..", 1)
        return range(int(a), int(b) + 1)
    return range(int(spec), int(spec) + 1)


def cmd_sweep(args) -> int:
    sf = load_scenario(args.scenario)
    scenario = sf.scenario
    if args.graph:
        graph = parse_graph_spec(args.graph, scenario.n)
        scenario = type(scenario)(graph, scenario.programs, scenario.delays)
    if not sf.watches:
        print("scenario declares no watched reads", file=sys.stderr)
        return EXIT_USAGE
    observed = {label: {} for label, _, _ in sf.watches}
    seeds = _parse_seed_range(args.seeds)
    for seed in seeds:
        sim = Simulator(
            type(scenario)(scenario.graph, scenario.programs,
                           type(scenario.delays)(seed, scenario.delays.min_delay,
                                                 scenario.delays.max_delay)),
            debug_checks=args.debug_checks,
        )
        history = sim.run_until_quiescence()
        ops = {o.op_id: o for o in history.ops}
        for label, pid, step in sf.watches:
            op = ops[sim.step_ops[(pid, step)]]
            observed[label].setdefault(encode_value(op.value), []).append(seed)

    ok = True
    payload = {"seeds": [seeds.start, seeds.stop - 1], "watches": {}}
    lines = []
    for label, pid, step in sf.watches:
        seen = observed[label]
        allowed = sf.allows.get(label)
        allowed_repr = ([encode_value(v) for v in allowed]
                        if allowed is not None else None)
        contained = (allowed is None
                     or all(v in allowed_repr for v in seen))
        ok = ok and contained
        payload["watches"][label] = {
            "observed": {v: len(s) for v, s in sorted(seen.items())},
            "allowed": allowed_repr,
            "contained": contained,
            "first_seed": {v: s[0] for v, s in sorted(seen.items())},
        }
        counts = ", ".join(f"{v} x{len(s)} (first seed {s[0]})"
                           for v, s in sorted(seen.items()))
        inside = "ok" if contained else "OUTSIDE ALLOWED SET"
        allow_txt = " ".join(allowed_repr) if allowed_repr is not None else "(any)"
        lines.append(f"{label} (p{pid} step {step}): observed {{{counts}}} "
                     f"allowed {{{allow_txt}}} -> {inside}")
    _emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fisheye",
        description="simulate the hybrid-order broadcast stack and check histories")
    ap.add_argument("--report", choices=["text", "json"], default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario to quiescence")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--output", "-o", default=None)
    p_run.add_argument("--debug-checks", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="check a recorded history")
    p_check.add_argument("history")
    p_check.add_argument("--condition", choices=["cc", "sc", "fisheye"],
                         default="fisheye")
    p_check.add_argument("--graph", default=None,
                         help="'empty', 'complete', or edge list like 0-1,2-3")
    p_check.add_argument("--oracle", action="store_true",
                         help="use the brute-force oracle instead of the pipeline")
    p_check.add_argument("--broadcast-properties", action="store_true",
                         help="also verify the delivery guarantees")
    p_check.set_defaults(func=cmd_check)

    p_sweep = sub.add_parser("sweep", help="tabulate watched reads across seeds")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--seeds", required=True, help="range like 0..999")
    p_sweep.add_argument("--graph", default=None)
    p_sweep.add_argument("--debug-checks", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedHistoryError as exc:
        print(f"malformed history: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LivenessError as exc:
        print(f"liveness failure: {exc}", file=sys.stderr)
        return EXIT_LIVENESS
    except FileNotFoundError as exc:
        print(f"cannot open {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except FisheyeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
