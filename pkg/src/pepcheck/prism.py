"""PRISM model/property text generation and a reader for the emitted subset.

The emitted model is an ``mdp`` with one module per diagram.  Silent
commands are written with the empty action ``[]`` except when they carry a
reward: PRISM attaches a transition reward ``[] g : r`` to *every* unlabelled
transition leaving a state that satisfies ``g``, including those of other
modules, so such commands get a private action name used by no other module.
A private action synchronises with nothing and therefore behaves exactly
like ``[]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EmitError
from .generator import DONE_LABEL, Command, MdpModule, RewardStructure
from .model import ProcessModel

__all__ = ["Namer", "emit_model", "emit_properties", "read_model", "PrismModel",
           "PROPERTY_FORMULAS", "MODEL_SUFFIXES"]

MODEL_SUFFIXES = (".dat", ".prism", ".nm")

_KEYWORDS = frozenset("""
A bool clock const ctmc C double dtmc E endinit endinvariant endmodule endobservables
endrewards endsystem false formula filter func F global G init invariant I int label
max mdp min module X nondeterministic observable observables of Pmax Pmin P pomdp
probabilistic prob pta R rate rewards Rmax Rmin S stochastic system true U W
""".split())
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

PROPERTY_FORMULAS = {
    "phi1": ("process completes with probability 1", f'Pmin=? [ F "{DONE_LABEL}" ]'),
    "phi2": ("process can be performed to completion", f'Pmax=? [ F "{DONE_LABEL}" ]'),
    "phi3": ("no reachable state deviates from completion",
             f'filter(forall, Pmax>0 [ F "{DONE_LABEL}" ])'),
    "phi4": ("minimum days for the whole process", f'Rmin{{"days"}}=? [ F "{DONE_LABEL}" ]'),
    "phi5": ("expected effort in working days", f'Rmax{{"wd"}}=? [ F "{DONE_LABEL}" ]'),
}


class Namer:
    """Deterministic, collision-free mapping of raw names to PRISM identifiers."""

    def __init__(self, reserved: Sequence[str] = ()):
        self.used: set[str] = set(reserved)
        self.names: dict[str, str] = {}

    def __call__(self, raw: str) -> str:
        if raw in self.names:
            return self.names[raw]
        base = re.sub(r"[^A-Za-z0-9_]", "_", raw)
        if not base or base[0].isdigit():
            base = "_" + base
        if base in _KEYWORDS:
            base += "_"
        name, k = base, 1
        while name in self.used:
            k += 1
            name = f"{base}_{k}"
        if not _IDENT.match(name):
            raise EmitError(raw)
        self.used.add(name)
        self.names[raw] = name
        return name


def _num(value: float) -> str:
    if not math.isfinite(value):
        raise EmitError(repr(value))
    value = float(value)
    return repr(int(value)) if value.is_integer() and abs(value) < 2**53 else repr(value)


def _updates(var: str, cmd: Command) -> str:
    if len(cmd.branches) == 1 and cmd.branches[0][0] == 1.0:
        return f"({var}'={cmd.branches[0][1]})"
    return " + ".join(f"{_num(p)} : ({var}'={t})" for p, t in cmd.branches)


def emit_model(modules: Sequence[MdpModule], rewards: Sequence[RewardStructure] = (),
               links=(), labels: Mapping[str, Mapping[str, frozenset[int]]] | None = None) -> str:
    """Render ``modules`` as a PRISM ``mdp`` model.

    ``labels`` uses the same shape as for
    :func:`~pepcheck.generator.compose_modules`.  The output is identical
    byte for byte for identical input.
    """
    if not modules:
        raise ValueError("emit_model needs at least one module")
    if len({m.name for m in modules}) != len(modules):
        raise ValueError("module names must be unique")
    ident = Namer(reserved=[DONE_LABEL])
    module_ids = {m.name: ident(m.name) for m in modules}
    var_ids = {m.name: ident(m.state_var) for m in modules}
    signals = sorted({c.action for m in modules for c in m.commands if c.action is not None})
    action_ids = {s: ident(s) for s in signals}

    rewarded: dict[tuple[str, int], str] = {}
    for m in modules:
        for k, cmd in enumerate(m.commands):
            if cmd.action is None and any(r.values.get((m.name, k), 0.0) for r in rewards):
                rewarded[(m.name, k)] = ident(f"r_{m.name}_{k}")

    out = ["mdp", ""]
    for m in modules:
        var = var_ids[m.name]
        out.append(f"module {module_ids[m.name]}")
        out.append(f"  {var} : [0..{m.max_location}] init {m.initial};")
        for k, cmd in enumerate(m.commands):
            if cmd.action is not None:
                act = action_ids[cmd.action]
            else:
                act = rewarded.get((m.name, k), "")
            out.append(f"  [{act}] {var}={cmd.guard} -> {_updates(var, cmd)};")
        out.append("endmodule")
        out.append("")

    for r in rewards:
        items = []
        for m in modules:
            for k, cmd in enumerate(m.commands):
                value = r.values.get((m.name, k), 0.0)
                if value:
                    act = action_ids[cmd.action] if cmd.action is not None else rewarded[(m.name, k)]
                    items.append(f"  [{act}] {var_ids[m.name]}={cmd.guard} : {_num(value)};")
        out.append(f'rewards "{r.name}"')
        out.extend(items)
        out.append("endrewards")
        out.append("")

    done = " & ".join(f"{var_ids[m.name]}={m.done}" for m in modules)
    out.append(f'label "{DONE_LABEL}" = {done};')
    label_ids = Namer(reserved=[DONE_LABEL])
    for name, where in (labels or {}).items():
        terms = [f"{var_ids[mod]}={loc}" for mod in module_ids if mod in where
                 for loc in sorted(where[mod])]
        out.append(f'label "{label_ids(name)}" = {" | ".join(terms) if terms else "false"};')
    return "\n".join(out) + "\n"


def emit_properties(model: ProcessModel) -> str:
    """Property file with the completion checks and, given a timeline, the reward queries."""
    keys = ["phi1", "phi2", "phi3"]
    if model.timeline is not None:
        keys += ["phi4", "phi5"]
    lines = []
    for key in keys:
        comment, formula = PROPERTY_FORMULAS[key]
        lines.append(f"// {key}: {comment}")
        lines.append(formula)
        lines.append("")
    return "\n".join(lines)


@dataclass
class PrismModel:
    """Result of :func:`read_model`."""

    modules: list[MdpModule]
    rewards: list[RewardStructure]
    labels: dict[str, dict[str, frozenset[int]]] = field(default_factory=dict)


_VAR = re.compile(r"^(\w+)\s*:\s*\[\s*0\s*\.\.\s*(\d+)\s*\]\s*init\s+(\d+)\s*;$")
_CMD = re.compile(r"^\[(\w*)\]\s*(\w+)\s*=\s*(\d+)\s*->\s*(.+);$")
_UPD_TEXT = r"(?:([0-9.eE+-]+)\s*:\s*)?\(\s*(\w+)'\s*=\s*(\d+)\s*\)"
_UPD = re.compile(_UPD_TEXT)
_UPDATES = re.compile(rf"{_UPD_TEXT}(?:\s*\+\s*{_UPD_TEXT})*")
_REW = re.compile(r"^\[(\w*)\]\s*(\w+)\s*=\s*(\d+)\s*:\s*([0-9.eE+-]+)\s*;$")
_LABEL = re.compile(r'^label\s+"(\w+)"\s*=\s*(.+);$')


def read_model(text: str) -> PrismModel:
    """Read back a model produced by :func:`emit_model`.

    Only the emitted subset of the PRISM language is understood; anything
    else raises ``ValueError`` naming the offending line.
    """
    modules: list[dict] = []
    reward_items: dict[str, list] = {}
    raw_labels: dict[str, str] = {}
    current = None
    reward = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line or line == "mdp":
            continue

        def fail():
            raise ValueError(f"line {lineno}: cannot read {raw.strip()!r}")

        if current is not None:
            if line == "endmodule":
                modules.append(current)
                current = None
            elif m := _VAR.match(line):
                current.update(var=m[1], size=int(m[2]) + 1, initial=int(m[3]))
            elif m := _CMD.match(line):
                if m[2] != current.get("var"):
                    fail()
                if not _UPDATES.fullmatch(m[4].strip()):
                    fail()
                branches = []
                for prob, var, loc in _UPD.findall(m[4]):
                    if var != current["var"]:
                        fail()
                    branches.append((float(prob) if prob else 1.0, int(loc)))
                current["commands"].append(Command(m[1] or None, int(m[3]), tuple(branches), ""))
            else:
                fail()
        elif reward is not None:
            if line == "endrewards":
                reward = None
            elif m := _REW.match(line):
                reward_items[reward].append((m[1] or None, m[2], int(m[3]), float(m[4])))
            else:
                fail()
        elif line.startswith("module "):
            current = {"name": line.split()[1], "commands": []}
        elif m := re.match(r'^rewards\s+"(\w+)"$', line):
            reward = m[1]
            reward_items[reward] = []
        elif m := _LABEL.match(line):
            raw_labels[m[1]] = m[2].strip()
        else:
            fail()

    by_var = {mod["var"]: mod for mod in modules}
    done = {}
    for term in raw_labels.pop(DONE_LABEL, "").split("&"):
        if "=" in term:
            var, loc = (t.strip() for t in term.split("="))
            done[var] = int(loc)

    labels = {}
    for name, expr in raw_labels.items():
        where: dict[str, set[int]] = {}
        if expr != "false":
            for term in expr.split("|"):
                var, loc = (t.strip() for t in term.split("="))
                where.setdefault(by_var[var]["name"], set()).add(int(loc))
        labels[name] = {k: frozenset(v) for k, v in where.items()}

    result = [
        MdpModule(
            name=mod["name"],
            state_var=mod["var"],
            size=mod["size"],
            initial=mod["initial"],
            done=done.get(mod["var"], -1),
            commands=tuple(mod["commands"]),
        )
        for mod in modules
    ]
    rewards = []
    for name, items in reward_items.items():
        values = {}
        for action, var, guard, value in items:
            mod = by_var[var]
            for k, cmd in enumerate(mod["commands"]):
                if cmd.action == action and cmd.guard == guard:
                    values[(mod["name"], k)] = value
        rewards.append(RewardStructure(name, values))
    return PrismModel(result, rewards, labels)
