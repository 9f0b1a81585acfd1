"""In-memory representation of BPMN process models (pool-based and event-based).

All types are frozen dataclasses holding tuples, so models are hashable,
comparable by value and safe to share between threads.  Structural equality
of two models is plain ``==``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

__all__ = [
    "NodeKind", "FlowNode", "SequenceFlow", "MessageFlow", "Pool", "Diagram",
    "EventLink", "Timeline", "ProcessModel", "Violation", "validate",
    "derive_event_links", "PROBABILITY_TOLERANCE",
]

PROBABILITY_TOLERANCE = 1e-9


class NodeKind(str, Enum):
    START = "StartEvent"
    END = "EndEvent"
    TASK = "Task"
    THROW = "IntermediateThrowEvent"
    CATCH = "IntermediateCatchEvent"
    XOR = "ExclusiveGateway"
    AND = "ParallelGateway"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FlowNode:
    id: str
    name: str
    kind: NodeKind
    signal: str | None = None
    duration_days: float | None = None
    effort_wd: float | None = None

    @property
    def is_gateway(self) -> bool:
        return self.kind in (NodeKind.XOR, NodeKind.AND)


@dataclass(frozen=True)
class SequenceFlow:
    id: str
    source: str
    target: str
    probability: float | None = None
    label: str | None = None


@dataclass(frozen=True)
class MessageFlow:
    id: str
    source: str
    target: str
    name: str = ""


@dataclass(frozen=True)
class Pool:
    id: str
    name: str
    diagram_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class EventLink:
    """A signal connecting one throwing node to the nodes catching it.

    ``thrower`` and each catcher are ``(diagram_id, node_id)`` pairs.
    """

    signal: str
    thrower: tuple[str, str]
    catchers: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Timeline:
    milestones: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Diagram:
    id: str
    name: str
    nodes: tuple[FlowNode, ...]
    flows: tuple[SequenceFlow, ...]
    level: int = 1
    role: str = ""

    @cached_property
    def _by_id(self) -> dict[str, FlowNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _adjacency(self):
        out, inc = defaultdict(list), defaultdict(list)
        for f in self.flows:
            out[f.source].append(f)
            inc[f.target].append(f)
        return out, inc

    def node(self, node_id: str) -> FlowNode:
        return self._by_id[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id

    def node_by_name(self, name: str) -> FlowNode | None:
        for n in self.nodes:
            if n.name == name:
                return n
        return None

    def outgoing(self, node_id: str) -> list[SequenceFlow]:
        return list(self._adjacency[0].get(node_id, ()))

    def incoming(self, node_id: str) -> list[SequenceFlow]:
        return list(self._adjacency[1].get(node_id, ()))

    @property
    def start(self) -> FlowNode:
        """The unique start event without incoming flows."""
        starts = [n for n in self.nodes
                  if n.kind is NodeKind.START and not self.incoming(n.id)]
        if len(starts) != 1:
            raise ValueError(f"diagram {self.id!r} has {len(starts)} entry start events")
        return starts[0]


@dataclass(frozen=True)
class ProcessModel:
    diagrams: tuple[Diagram, ...] = ()
    pools: tuple[Pool, ...] = ()
    message_flows: tuple[MessageFlow, ...] = ()
    event_links: tuple[EventLink, ...] = ()
    timeline: Timeline | None = None
    abstraction_levels: int = field(default=0)

    def __post_init__(self):
        # 0 means "derive from the diagrams"
        if self.abstraction_levels == 0:
            object.__setattr__(self, "abstraction_levels",
                               max((d.level for d in self.diagrams), default=1))

    @cached_property
    def _diagram_by_id(self) -> dict[str, Diagram]:
        return {d.id: d for d in self.diagrams}

    @cached_property
    def _node_home(self) -> dict[str, str]:
        return {n.id: d.id for d in self.diagrams for n in d.nodes}

    def diagram(self, diagram_id: str) -> Diagram:
        return self._diagram_by_id[diagram_id]

    def diagram_of(self, node_id: str) -> Diagram:
        """The diagram containing ``node_id``."""
        return self._diagram_by_id[self._node_home[node_id]]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_home

    def pool_of(self, diagram_id: str) -> Pool | None:
        for p in self.pools:
            if diagram_id in p.diagram_ids:
                return p
        return None


@dataclass(frozen=True)
class Violation:
    element: str
    rule: str

    def __str__(self) -> str:
        return f"{self.element}: {self.rule}"


def _is_thrower(node: FlowNode) -> bool:
    return node.signal is not None and node.kind in (NodeKind.THROW, NodeKind.END)


def derive_event_links(diagrams) -> tuple[EventLink, ...]:
    """Build event links from the signal-bearing nodes of ``diagrams``.

    Only signals with exactly one thrower and at least one catcher produce a
    link; malformed signals are left for :func:`validate` to report.  Links
    are ordered by signal name, catchers by diagram then node order.
    """
    throwers = defaultdict(list)
    catchers = defaultdict(list)
    for d in diagrams:
        for n in d.nodes:
            if n.signal is None:
                continue
            if _is_thrower(n):
                throwers[n.signal].append((d.id, n.id))
            elif n.kind is NodeKind.CATCH:
                catchers[n.signal].append((d.id, n.id))
    links = []
    for signal in sorted(set(throwers) | set(catchers)):
        if len(throwers[signal]) == 1 and catchers[signal]:
            links.append(EventLink(signal, throwers[signal][0], tuple(catchers[signal])))
    return tuple(links)


def _validate_diagram(d: Diagram, out: list[Violation]) -> None:
    kinds = [n.kind for n in d.nodes]
    n_start = kinds.count(NodeKind.START)
    if n_start != 1:
        out.append(Violation(d.id, f"diagram must have exactly one start event (found {n_start})"))
    if NodeKind.END not in kinds:
        out.append(Violation(d.id, "diagram must have at least one end event"))

    names: dict[str, str] = {}
    for n in d.nodes:
        if n.name in names:
            out.append(Violation(n.id, f"node name {n.name!r} is not unique in diagram {d.id}"))
        names.setdefault(n.name, n.id)
        if n.kind in (NodeKind.THROW, NodeKind.CATCH) and n.signal is None:
            out.append(Violation(n.id, "throw/catch event must carry a signal"))
        if n.signal is not None and n.kind not in (NodeKind.THROW, NodeKind.CATCH, NodeKind.END):
            out.append(Violation(n.id, "only throw/catch/end events may carry a signal"))
        for attr in ("duration_days", "effort_wd"):
            value = getattr(n, attr)
            if value is None:
                continue
            if n.kind is not NodeKind.TASK:
                out.append(Violation(n.id, f"{attr} is only allowed on tasks"))
            elif not (value >= 0 and math.isfinite(value)):
                out.append(Violation(n.id, f"{attr} must be a nonnegative number"))

    for f in d.flows:
        for end in (f.source, f.target):
            if not d.has_node(end):
                out.append(Violation(f.id, f"sequence flow endpoint {end!r} is not a node of diagram {d.id}"))
        if f.probability is None:
            continue
        if d.has_node(f.source) and d.node(f.source).kind is not NodeKind.XOR:
            out.append(Violation(f.id, "probability is only allowed on flows leaving an exclusive gateway"))
        if not (0.0 < f.probability <= 1.0):
            out.append(Violation(f.id, "probability must lie in (0, 1]"))

    for n in d.nodes:
        if n.kind is not NodeKind.XOR:
            continue
        probs = [f.probability for f in d.outgoing(n.id)]
        annotated = [p for p in probs if p is not None]
        if not annotated:
            continue
        if len(annotated) != len(probs):
            out.append(Violation(n.id, "gateway mixes probabilistic and unannotated out-flows"))
        elif abs(math.fsum(annotated) - 1.0) > PROBABILITY_TOLERANCE:
            out.append(Violation(n.id, "probabilities must sum to 1"))


def validate(model: ProcessModel) -> list[Violation]:
    """Check every invariant of ``model``; an empty list means the model is valid."""
    out: list[Violation] = []

    seen: set[str] = set()
    for d in model.diagrams:
        if d.id in seen:
            out.append(Violation(d.id, "diagram identifier is not unique"))
        seen.add(d.id)
        if d.level < 1:
            out.append(Violation(d.id, "abstraction level must be a positive integer"))
        _validate_diagram(d, out)

    node_ids: set[str] = set()
    for d in model.diagrams:
        for n in d.nodes:
            if n.id in node_ids:
                out.append(Violation(n.id, "node identifier is not unique in the model"))
            node_ids.add(n.id)

    expected_levels = max((d.level for d in model.diagrams), default=1)
    if model.abstraction_levels < 1 or model.abstraction_levels != expected_levels:
        out.append(Violation("model", f"abstraction_levels must equal the maximum diagram level ({expected_levels})"))

    if model.message_flows and model.event_links:
        out.append(Violation("model", "message flows and event links cannot coexist"))

    owner: dict[str, str] = {}
    for p in model.pools:
        for did in p.diagram_ids:
            if did not in seen:
                out.append(Violation(p.id, f"pool references unknown diagram {did!r}"))
            if did in owner:
                out.append(Violation(did, f"diagram belongs to pools {owner[did]} and {p.id}"))
            owner.setdefault(did, p.id)

    for mf in model.message_flows:
        missing = [e for e in (mf.source, mf.target) if not model.has_node(e)]
        for e in missing:
            out.append(Violation(mf.id, f"message flow endpoint {e!r} does not exist"))
        if missing:
            continue
        da, db = model.diagram_of(mf.source).id, model.diagram_of(mf.target).id
        if da == db or (da in owner and owner.get(da) == owner.get(db)):
            out.append(Violation(mf.id, "message flow must cross pools"))

    throwers = defaultdict(list)
    catchers = defaultdict(list)
    for d in model.diagrams:
        for n in d.nodes:
            if _is_thrower(n):
                throwers[n.signal].append(n.id)
            elif n.kind is NodeKind.CATCH and n.signal is not None:
                catchers[n.signal].append(n.id)
    for signal in sorted(set(throwers) | set(catchers)):
        if len(throwers[signal]) != 1:
            out.append(Violation(signal, f"signal must have exactly one thrower (found {len(throwers[signal])})"))
        if not catchers[signal]:
            out.append(Violation(signal, "signal has no catching event"))

    for link in model.event_links:
        if not link.catchers:
            out.append(Violation(link.signal, "event link needs at least one catcher"))
        for role, (did, nid) in [("thrower", link.thrower)] + [("catcher", c) for c in link.catchers]:
            if did not in seen or not model.diagram(did).has_node(nid):
                out.append(Violation(link.signal, f"event link {role} {did}/{nid} does not exist"))
                continue
            node = model.diagram(did).node(nid)
            ok = _is_thrower(node) if role == "thrower" else node.kind is NodeKind.CATCH
            if not ok:
                out.append(Violation(nid, f"node kind {node.kind} cannot be an event link {role}"))
            if node.signal != link.signal:
                out.append(Violation(nid, f"node signal does not match event link {link.signal!r}"))
    link_signals = [link.signal for link in model.event_links]
    for signal in sorted({s for s in link_signals if link_signals.count(s) > 1}):
        out.append(Violation(signal, "signal is declared by more than one event link"))

    if model.timeline is not None:
        prev = None
        for name, day in model.timeline.milestones:
            if day < 0 or int(day) != day:
                out.append(Violation(name, "milestone day must be a nonnegative integer"))
            if prev is not None and day <= prev:
                out.append(Violation(name, "milestone days must strictly increase"))
            prev = day
    return out
