"""Compilation of event-based diagrams into MDP modules and their product.

Each diagram becomes one module with a single integer state variable.  A
location of the module is a set of token positions in the diagram: one
location per flow node (a single token sitting on it), one ``done``
location (no token left) and, for diagrams with parallel gateways, further
locations for the reachable multi-token markings.  Tokens waiting at a
parallel join sit on the join's incoming flows.

Guarded commands move tokens:

* start events, tasks and parallel gateways pass their token to every
  outgoing flow (a node without outgoing flow simply consumes it);
* an exclusive gateway with probabilities yields one command with one branch
  per outgoing flow, an unannotated one yields one command per flow;
* a parallel join fires once all its incoming flows hold a token;
* end events consume their token;
* nodes carrying a signal fire under the signal's action label, all nodes of
  this diagram with that signal moving together.

Modules are composed by multi-way synchronisation: a labelled action fires
only when every module using the label has an enabled command for it.
"""

from __future__ import annotations

import itertools
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import GenerationError, StateSpaceLimitExceeded, UnlinkedSignal
from .model import Diagram, EventLink, NodeKind, ProcessModel

__all__ = ["Command", "MdpModule", "RewardStructure", "Choice", "ComposedMdp",
           "generate_module", "compose_modules", "attach_rewards", "milestone_labels",
           "DEFAULT_MAX_STATES", "DONE_LABEL"]

DEFAULT_MAX_STATES = 10**7
DONE_LABEL = "done_all"


@dataclass(frozen=True)
class Command:
    action: str | None
    guard: int
    branches: tuple[tuple[float, int], ...]
    source: str


@dataclass(frozen=True)
class MdpModule:
    name: str
    state_var: str
    size: int
    initial: int
    done: int
    commands: tuple[Command, ...]
    location_of: Mapping[str, int] = field(default_factory=dict)
    # node ids holding a token in each location
    configs: tuple[frozenset, ...] = ()
    diagram: Diagram | None = field(default=None, compare=False, repr=False)

    @property
    def max_location(self) -> int:
        return self.size - 1

    @property
    def actions(self) -> frozenset[str]:
        return frozenset(c.action for c in self.commands if c.action is not None)


@dataclass(frozen=True)
class RewardStructure:
    """Named costs on commands, keyed by ``(module name, command index)``."""

    name: str
    values: Mapping[tuple[str, int], float]


def _merge_branches(branches):
    merged: dict[int, float] = {}
    for p, target in branches:
        merged[target] = merged.get(target, 0.0) + p
    return tuple((p, t) for t, p in merged.items())


def generate_module(d: Diagram, links: Sequence[EventLink] = (), *,
                    max_locations: int = DEFAULT_MAX_STATES) -> MdpModule:
    """Compile diagram ``d`` to an :class:`MdpModule`.

    ``links`` must cover every signal used by ``d``; otherwise
    :class:`UnlinkedSignal` is raised.  A diagram in which two tokens can
    meet on the same node is rejected with :class:`GenerationError`.
    """
    linked = {link.signal for link in links}
    order = {n.id: i for i, n in enumerate(d.nodes)}
    participants: dict[str, list[str]] = defaultdict(list)
    for n in d.nodes:
        if n.signal is not None:
            if n.signal not in linked:
                raise UnlinkedSignal(n.signal, n.id)
            participants[n.signal].append(n.id)
    joins = [n.id for n in d.nodes
             if n.kind is NodeKind.AND and len(d.incoming(n.id)) > 1]
    join_set = set(joins)
    outgoing = {n.id: d.outgoing(n.id) for n in d.nodes}

    def position(flow) -> tuple[str, str]:
        if flow.target in join_set:
            return ("f", flow.id)
        return ("n", flow.target)

    def put(marking: set, flows) -> frozenset:
        for f in flows:
            pos = position(f)
            if pos in marking:
                raise GenerationError(f"diagram {d.id!r} is unsafe: two tokens meet at {pos[1]!r}")
            marking.add(pos)
        return frozenset(marking)

    def moves(config: frozenset):
        """Yield ``(action, source, [(prob, config'), ...])`` for ``config``."""
        tokens = sorted((p for p in config if p[0] == "n"), key=lambda p: order[p[1]])
        for pos in tokens:
            node = d.node(pos[1])
            if node.signal is not None:
                continue
            rest = set(config) - {pos}
            outs = outgoing[node.id]
            if node.kind is NodeKind.END or not outs:
                yield None, node.id, [(1.0, frozenset(rest))]
            elif node.kind is NodeKind.XOR:
                if outs[0].probability is not None:
                    yield None, node.id, [(f.probability, put(set(rest), [f])) for f in outs]
                else:
                    for f in outs:
                        yield None, node.id, [(1.0, put(set(rest), [f]))]
            else:
                yield None, node.id, [(1.0, put(rest, outs))]
        for g in joins:
            waiting = {("f", f.id) for f in d.incoming(g)}
            if waiting <= config:
                rest = set(config) - waiting
                if ("n", g) in rest:
                    raise GenerationError(f"diagram {d.id!r} is unsafe: two tokens meet at {g!r}")
                rest.add(("n", g))
                yield None, g, [(1.0, frozenset(rest))]
        for signal in sorted(participants):
            nodes = participants[signal]
            held = {("n", nid) for nid in nodes}
            if held <= config:
                rest = set(config) - held
                for nid in nodes:
                    if d.node(nid).kind is not NodeKind.END:
                        put(rest, outgoing[nid])
                source = nodes[0] if len(nodes) == 1 else signal
                yield signal, source, [(1.0, frozenset(rest))]

    configs: list[frozenset] = [frozenset({("n", n.id)}) for n in d.nodes]
    configs.append(frozenset())
    if len(configs) > max_locations:
        raise StateSpaceLimitExceeded(max_locations, len(configs))
    index = {c: i for i, c in enumerate(configs)}
    done = index[frozenset()]
    try:
        initial = index[frozenset({("n", d.start.id)})]
    except ValueError as exc:
        raise GenerationError(str(exc)) from None

    commands = []
    i = 0
    while i < len(configs):
        config = configs[i]
        for action, source, branches in moves(config):
            targets = []
            for p, nxt in branches:
                if nxt not in index:
                    if len(configs) >= max_locations:
                        raise StateSpaceLimitExceeded(max_locations, len(configs))
                    index[nxt] = len(configs)
                    configs.append(nxt)
                targets.append((p, index[nxt]))
            commands.append(Command(action, i, _merge_branches(targets), source))
        i += 1

    return MdpModule(
        name=d.id,
        state_var=f"s_{d.id}",
        size=len(configs),
        initial=initial,
        done=done,
        commands=tuple(commands),
        location_of={n.id: i for i, n in enumerate(d.nodes)},
        configs=tuple(frozenset(p[1] for p in c if p[0] == "n") for c in configs),
        diagram=d,
    )


@dataclass(frozen=True)
class Choice:
    action: str | None
    branches: tuple[tuple[float, int], ...]
    rewards: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class ComposedMdp:
    """Explicit reachable product of a list of modules."""

    module_names: tuple[str, ...]
    states: tuple[tuple[int, ...], ...]
    initial: int
    choices: tuple[tuple[Choice, ...], ...]
    labels: Mapping[str, frozenset[int]]
    reward_names: tuple[str, ...] = ()
    build_time: float = 0.0

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_choices(self) -> int:
        return sum(len(cs) for cs in self.choices)

    @property
    def num_transitions(self) -> int:
        return sum(len(c.branches) for cs in self.choices for c in cs)

    @property
    def action_labels(self) -> tuple[str, ...]:
        return tuple(sorted({c.action for cs in self.choices for c in cs if c.action is not None}))


def compose_modules(modules: Sequence[MdpModule], links: Sequence[EventLink] = (),
                    rewards: Sequence[RewardStructure] = (), *,
                    labels: Mapping[str, Mapping[str, frozenset[int]]] | None = None,
                    max_states: int = DEFAULT_MAX_STATES) -> ComposedMdp:
    """Build the reachable state space of the synchronised product.

    States are numbered breadth-first from the tuple of initial locations.
    ``labels`` maps a label name to ``{module name: locations}``; a state
    carries the label if any listed module sits in one of its locations.
    The label ``done_all`` (every module in its ``done`` location) is always
    present.
    """
    if not modules:
        raise ValueError("compose_modules needs at least one module")
    names = [m.name for m in modules]
    if len(set(names)) != len(names):
        raise ValueError("module names must be unique")
    if links:
        # a linked signal may have no command at all (e.g. it is never enabled in
        # a merged diagram), but every label in use must belong to some link
        known = {link.signal for link in links}
        for m in modules:
            for action in sorted(m.actions - known):
                raise ValueError(f"module {m.name!r} uses label {action!r} that no event link declares")

    reward_names = tuple(r.name for r in rewards)
    n_rew = len(reward_names)

    silent = []
    labelled = []
    alphabet: dict[str, int] = defaultdict(int)
    for m in modules:
        by_loc = defaultdict(list)
        by_loc_label = defaultdict(lambda: defaultdict(list))
        for k, cmd in enumerate(m.commands):
            rew = tuple(float(r.values.get((m.name, k), 0.0)) for r in rewards)
            entry = (cmd.branches, rew)
            if cmd.action is None:
                by_loc[cmd.guard].append(entry)
            else:
                by_loc_label[cmd.guard][cmd.action].append(entry)
        silent.append(dict(by_loc))
        labelled.append({loc: dict(v) for loc, v in by_loc_label.items()})
        for action in m.actions:
            alphabet[action] += 1

    zero = (0.0,) * n_rew
    started = time.perf_counter()
    init = tuple(m.initial for m in modules)
    index = {init: 0}
    states = [init]
    choices = []

    def intern(state):
        idx = index.get(state)
        if idx is None:
            if len(states) >= max_states:
                raise StateSpaceLimitExceeded(max_states, len(states))
            idx = index[state] = len(states)
            states.append(state)
        return idx

    n_mod = len(modules)
    head = 0
    while head < len(states):
        state = states[head]
        head += 1
        out = []
        for i in range(n_mod):
            for branches, rew in silent[i].get(state[i], ()):
                succ = []
                for p, loc in branches:
                    nxt = state[:i] + (loc,) + state[i + 1:]
                    succ.append((p, intern(nxt)))
                out.append(Choice(None, tuple(succ), rew))
        enabled: dict[str, list[int]] = defaultdict(list)
        for i in range(n_mod):
            for action in labelled[i].get(state[i], ()):
                enabled[action].append(i)
        for action in sorted(enabled):
            parts = enabled[action]
            if len(parts) != alphabet[action]:
                continue
            options = [labelled[i][state[i]][action] for i in parts]
            for combo in itertools.product(*options):
                dist = {}
                for outcome in itertools.product(*(b for b, _ in combo)):
                    p = 1.0
                    nxt = list(state)
                    for i, (q, loc) in zip(parts, outcome):
                        p *= q
                        nxt[i] = loc
                    target = intern(tuple(nxt))
                    dist[target] = dist.get(target, 0.0) + p
                rew = tuple(map(sum, zip(*(r for _, r in combo)))) if n_rew else zero
                out.append(Choice(action, tuple((p, t) for t, p in dist.items()), rew))
        choices.append(tuple(out))
    elapsed = time.perf_counter() - started

    done = tuple(m.done for m in modules)
    state_labels = {DONE_LABEL: frozenset(i for i, s in enumerate(states) if s == done)}
    pos = {name: i for i, name in enumerate(names)}
    for label, where in (labels or {}).items():
        hits = set()
        for mod_name, locs in where.items():
            j = pos[mod_name]
            hits.update(i for i, s in enumerate(states) if s[j] in locs)
        state_labels[label] = frozenset(hits)

    return ComposedMdp(
        module_names=tuple(names),
        states=tuple(states),
        initial=0,
        choices=tuple(choices),
        labels=state_labels,
        reward_names=reward_names,
        build_time=elapsed,
    )


def attach_rewards(modules: Sequence[MdpModule], model: ProcessModel) -> list[RewardStructure]:
    """Reward structures ``days`` and ``wd`` from task durations and effort.

    Every command completing a task carries the task's ``duration_days``
    (``days``) and ``effort_wd`` (``wd``), missing values counting as 0.
    Models without a timeline get no rewards.
    """
    if model.timeline is None:
        return []
    days, wd = {}, {}
    for m in modules:
        if m.diagram is None:
            continue
        for k, cmd in enumerate(m.commands):
            if cmd.action is not None or not m.diagram.has_node(cmd.source):
                continue
            node = m.diagram.node(cmd.source)
            if node.kind is NodeKind.TASK:
                days[(m.name, k)] = float(node.duration_days or 0.0)
                wd[(m.name, k)] = float(node.effort_wd or 0.0)
    return [RewardStructure("days", days), RewardStructure("wd", wd)]


def milestone_labels(modules: Sequence[MdpModule], model: ProcessModel) -> dict[str, dict[str, frozenset[int]]]:
    """Locations at which a node named like a timeline milestone holds a token."""
    if model.timeline is None:
        return {}
    out = {}
    for name, _ in model.timeline.milestones:
        where = {}
        for m in modules:
            if m.diagram is None:
                continue
            node = m.diagram.node_by_name(name)
            if node is None:
                continue
            where[m.name] = frozenset(i for i, c in enumerate(m.configs) if node.id in c)
        out[name] = where
    return out
