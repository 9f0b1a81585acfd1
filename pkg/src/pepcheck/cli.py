"""Command-line front end.

Exit codes: 0 success, 1 unreadable or invalid model, 2 conversion or
compilation failure, 3 state-space limit exceeded, 4 a checked property
does not hold.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import engine
from .bpmn_xml import parse_file, serialize
from .differentiator import Dialect
from .errors import (GenerationError, ParseError, SpliceError, StateSpaceLimitExceeded,
                     ValidationError)
from .generator import DEFAULT_MAX_STATES, DONE_LABEL
from .pipeline import compile_baseline, compile_model, prepare
from .prism import emit_properties

EXIT_OK, EXIT_INVALID, EXIT_CONVERSION, EXIT_STATE_LIMIT, EXIT_PROPERTY = 0, 1, 2, 3, 4
PROPERTIES = ("phi1", "phi2", "phi3", "phi4", "phi5")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str):
    try:
        return parse_file(path)
    except OSError as exc:
        raise _Fail(EXIT_INVALID, f"cannot read {path}: {exc.strerror}") from None
    except ParseError as exc:
        raise _Fail(EXIT_INVALID, f"parse error: {exc}") from None
    except ValidationError as exc:
        lines = "\n".join(f"  {v}" for v in exc.violations)
        raise _Fail(EXIT_INVALID, f"invalid model:\n{lines}") from None


def _prepare(model):
    try:
        return prepare(model)
    except SpliceError as exc:
        raise _Fail(EXIT_CONVERSION, f"conversion error: {exc}") from None


def _compile(fn, model, max_states):
    try:
        return fn(model, max_locations=max_states)
    except StateSpaceLimitExceeded:
        raise
    except GenerationError as exc:
        raise _Fail(EXIT_CONVERSION, f"compilation error: {exc}") from None


def _stem(path: str) -> str:
    name = Path(path).name
    for suffix in (".ebpmn.xml", ".bpmn", ".xml"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def cmd_convert(args) -> int:
    model = _load(args.input)
    prepared = _prepare(model)
    compiled = _compile(compile_model, prepared.model, args.max_states)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(args.input)
    suffix = ".dat" if args.format == "dat" else ".prism"
    written = {
        f"{stem}{suffix}": compiled.emit(),
        f"{stem}.props": emit_properties(prepared.model),
        f"{stem}.ebpmn.xml": serialize(prepared.model),
    }
    if prepared.report is not None:
        written["dedup_report.txt"] = prepared.report.to_text()
    for name, text in written.items():
        (out / name).write_text(text, encoding="utf-8", newline="\n")
    print(f"dialect: {prepared.dialect}")
    if prepared.dialect is Dialect.EVENT_BASED:
        print("converter skipped (input is already event-based)")
    for name in written:
        print(f"wrote {out / name}")
    return EXIT_OK


def _row(name, levels, mdp, deterministic):
    states, transitions, build_time = engine.count_state_space(mdp)
    shown = "-" if deterministic else f"{build_time:.3f}"
    return f"{name:<7} {levels:>6} {states:>12} {transitions:>12} {shown:>12}"


def cmd_stats(args) -> int:
    model = _load(args.input)
    prepared = _prepare(model)
    print(f"{'model':<7} {'levels':>6} {'states':>12} {'transitions':>12} {'build_time_s':>12}")
    label = "eBPMN"
    mdp = _compose(compile_model, prepared.model, args.max_states, label)
    print(_row(label, prepared.model.abstraction_levels, mdp, args.deterministic))
    if args.baseline_merged:
        if prepared.dialect is not Dialect.POOL_BASED:
            print("note: input is event-based; no pool-based baseline", file=sys.stderr)
            return EXIT_OK
        base = _compose(compile_baseline, model, args.max_states, "pBPMN")
        print(_row("pBPMN", model.abstraction_levels, base, args.deterministic))
        ds = 100.0 * (1 - mdp.num_states / base.num_states)
        dt = 100.0 * (1 - mdp.num_transitions / base.num_transitions) if base.num_transitions else 0.0
        print(f"reduction: {ds:.1f}% in states and {dt:.1f}% in transitions")
    return EXIT_OK


def _compose(fn, model, max_states, name):
    try:
        return _compile(fn, model, max_states).compose(max_states)
    except StateSpaceLimitExceeded as exc:
        print(f"{name}: state space limit reached after {exc.explored} states "
              f"(--max-states {exc.limit})")
        raise _Fail(EXIT_STATE_LIMIT, str(exc)) from None


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6g}"


def cmd_check(args) -> int:
    model = _load(args.input)
    prepared = _prepare(model)
    mdp = _compose(compile_model, prepared.model, args.max_states, "eBPMN")
    wanted = PROPERTIES if args.property == "all" else (args.property,)
    eps = {"epsilon": args.epsilon}
    failed = False
    for prop in wanted:
        if prop == "phi1":
            deadlocks = engine.deadlock_states(mdp)
            pmin = engine.reach_probability(mdp, DONE_LABEL, "min", **eps)
            ok = not deadlocks and pmin >= 1.0
            detail = f"deadlock states: {len(deadlocks)}, Pmin(F {DONE_LABEL}) = {_fmt(pmin)}"
        elif prop == "phi2":
            pmax = engine.reach_probability(mdp, DONE_LABEL, "max", **eps)
            ok = pmax >= 1.0
            detail = f"Pmax(F {DONE_LABEL}) = {_fmt(pmax)}"
        elif prop == "phi3":
            target = np.zeros(mdp.num_states, dtype=bool)
            target[list(mdp.labels[DONE_LABEL])] = True
            stuck = int(engine.prob0_max(mdp, target).sum())
            ok = stuck == 0
            detail = f"states that can no longer complete: {stuck}"
        else:
            reward, mode, unit = ("days", "min", "d") if prop == "phi4" else ("wd", "max", "wd")
            if reward not in mdp.reward_names:
                print(f"{prop}  not applicable (no timeline, no reward structure)")
                continue
            value = engine.expected_reward(mdp, reward, DONE_LABEL, mode, **eps)
            print(f"{prop}  {_fmt(value)} {unit}")
            continue
        failed |= not ok
        print(f"{prop}  {'✓' if ok else '✗'}  {detail}")
    return EXIT_PROPERTY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepcheck",
                                     description="Convert BPMN process models to PRISM MDPs and check them.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES,
                        help="state-space cap (default: %(default)s)")
    common.add_argument("--epsilon", type=float, default=engine.DEFAULT_EPSILON,
                        help="value-iteration threshold (default: %(default)s)")
    common.add_argument("--deterministic", action="store_true",
                        help="suppress timings so output is reproducible")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="write PRISM model, properties and eBPMN XML")
    p.add_argument("input")
    p.add_argument("output_dir")
    p.add_argument("--format", choices=("dat", "prism"), default="dat")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", parents=[common], help="print MDP state and transition counts")
    p.add_argument("input")
    p.add_argument("--baseline-merged", action="store_true",
                   help="also size the merged-diagram pool-based baseline")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("check", parents=[common], help="check the completion and reward properties")
    p.add_argument("input")
    p.add_argument("--property", default="all",
                   type=lambda s: s.replace("φ", "phi"), choices=PROPERTIES + ("all",))
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"pepcheck: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
