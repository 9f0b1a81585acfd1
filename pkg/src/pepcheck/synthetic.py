"""Programmatic model construction: a diagram builder, the bundled sample
models, small analysis fixtures and a random generator of pool-based models.
"""

from __future__ import annotations

import random
from dataclasses import replace

from .model import (Diagram, FlowNode, MessageFlow, NodeKind, Pool, ProcessModel,
                    SequenceFlow, Timeline, derive_event_links)

__all__ = ["DiagramBuilder", "park_pilot_pool_model", "park_pilot_2level_model", "park_pilot_event_model",
           "stuck_catcher_model", "retry_loop_model", "divergence_model",
           "sequential_tasks_model", "branching_cost_model", "random_pool_model",
           "event_model", "copy_diagram", "SAMPLES"]


class DiagramBuilder:
    """Incrementally assemble a :class:`Diagram`.

    Node ids are ``<diagram id>_<counter>``; node names must be unique.

    >>> b = DiagramBuilder("D1", role="Tester")
    >>> b.chain(b.start(), b.task("Test", days=2), b.end())
    >>> len(b.build().nodes)
    3
    """

    def __init__(self, diagram_id: str, name: str = "", *, level: int = 1, role: str = ""):
        self.id = diagram_id
        self.name = name or diagram_id
        self.level = level
        self.role = role
        self.nodes: list[FlowNode] = []
        self.flows: list[SequenceFlow] = []
        self._by_name: dict[str, str] = {}

    def _add(self, kind: NodeKind, name: str | None, **attrs) -> str:
        node_id = f"{self.id}_{len(self.nodes) + 1}"
        name = name or f"{kind.value} {len(self.nodes) + 1}"
        self.nodes.append(FlowNode(node_id, name, kind, **attrs))
        self._by_name[name] = node_id
        return node_id

    def start(self, name: str = "start") -> str:
        return self._add(NodeKind.START, name)

    def end(self, name: str = "end", signal: str | None = None) -> str:
        return self._add(NodeKind.END, name, signal=signal)

    def task(self, name: str, days: float | None = None, wd: float | None = None) -> str:
        return self._add(NodeKind.TASK, name, duration_days=days, effort_wd=wd)

    def xor(self, name: str | None = None) -> str:
        return self._add(NodeKind.XOR, name)

    def fork(self, name: str | None = None) -> str:
        return self._add(NodeKind.AND, name)

    def throw(self, signal: str, name: str | None = None) -> str:
        return self._add(NodeKind.THROW, name or f"throw {signal}", signal=signal)

    def catch(self, signal: str, name: str | None = None) -> str:
        return self._add(NodeKind.CATCH, name or f"catch {signal}", signal=signal)

    def flow(self, source: str, target: str, probability: float | None = None,
             label: str | None = None) -> str:
        flow_id = f"{self.id}_f{len(self.flows) + 1}"
        self.flows.append(SequenceFlow(flow_id, source, target, probability, label))
        return flow_id

    def chain(self, *node_ids: str) -> None:
        for a, b in zip(node_ids, node_ids[1:]):
            self.flow(a, b)

    def ref(self, name: str) -> str:
        """Id of the node called ``name``."""
        return self._by_name[name]

    def build(self) -> Diagram:
        return Diagram(self.id, self.name, tuple(self.nodes), tuple(self.flows), self.level, self.role)


def copy_diagram(d: Diagram, new_id: str, **changes) -> Diagram:
    """Structural copy of ``d`` under ``new_id``; element ids prefixed by ``d.id`` are renamed."""
    def rename(element_id: str) -> str:
        return new_id + element_id[len(d.id):] if element_id.startswith(d.id) else f"{new_id}_{element_id}"

    nodes = tuple(replace(n, id=rename(n.id)) for n in d.nodes)
    flows = tuple(replace(f, id=rename(f.id), source=rename(f.source), target=rename(f.target))
                  for f in d.flows)
    return replace(d, id=new_id, nodes=nodes, flows=flows, **changes)


def event_model(*diagrams: Diagram, timeline: Timeline | None = None) -> ProcessModel:
    """Event-based model whose links are derived from the diagrams' signals."""
    return ProcessModel(diagrams=tuple(diagrams), event_links=derive_event_links(diagrams),
                        timeline=timeline)


def _calibration(diagram_id: str, lab: str) -> Diagram:
    b = DiagramBuilder(diagram_id, f"Sensor calibration ({lab})", level=3, role="Calibration Engineer")
    s, start_cal = b.start(), b.task("Start calibration", days=1, wd=1)
    ultra, cam = b.task("Calibrate ultrasonic sensors", days=3, wd=6), b.task("Calibrate camera", days=2, wd=4)
    check, adjust = b.xor("Calibration within tolerance?"), b.task("Adjust mounting", days=1, wd=2)
    confirm, e = b.task("Confirm calibration", days=1, wd=1), b.end()
    b.chain(s, start_cal, ultra, cam, check)
    b.flow(check, confirm, 0.9, "yes")
    b.flow(check, adjust, 0.1, "no")
    b.flow(adjust, cam)
    b.chain(confirm, e)
    return b.build()


def _release(level: int = 1) -> Diagram:
    b = DiagramBuilder("D1", "Park pilot release", level=level, role="Project Manager")
    s = b.start()
    scope = b.task("Define test scope", days=5, wd=10)
    order = b.task("Commission test campaign", days=2, wd=3)
    wait = b.task("Review test report", days=3, wd=6)
    decide = b.xor("Release?")
    approve, rework = b.task("Approve release", days=1, wd=2), b.task("Plan rework", days=4, wd=8)
    e1, e2 = b.end("released"), b.end("rework planned")
    b.chain(s, scope, order, wait, decide)
    b.flow(decide, approve)
    b.flow(decide, rework)
    b.chain(approve, e1)
    b.chain(rework, e2)
    return b.build()


def _test_campaign(level: int = 2) -> Diagram:
    b = DiagramBuilder("D2", "Park pilot test campaign", level=level, role="Test Manager")
    s = b.start()
    receive = b.task("Receive test order", days=1, wd=1)
    fork, join = b.fork("split"), b.fork("join")
    run = b.task("Run parking scenarios", days=10, wd=30)
    request = b.task("Request calibration", days=1, wd=1)
    collect = b.task("Collect calibration data", days=2, wd=3)
    evaluate = b.task("Evaluate results", days=3, wd=6)
    verdict = b.xor("Scenarios passed?")
    rerun = b.task("Rerun failed scenarios", days=4, wd=12)
    report = b.task("Send test report", days=1, wd=2)
    e = b.end()
    b.chain(s, receive, fork)
    b.flow(fork, run)
    b.flow(fork, request)
    b.chain(request, collect, join)
    b.chain(run, join)
    b.chain(join, evaluate, verdict)
    b.flow(verdict, report, 0.7, "passed")
    b.flow(verdict, rerun, 0.3, "failed")
    b.flow(rerun, evaluate)
    b.chain(report, e)
    return b.build()


def park_pilot_pool_model() -> ProcessModel:
    """Three-level pool-based analogue of an automated-parking test process.

    Diagrams D3 and D4 are the same calibration process run by two teams;
    only D4 talks to the test campaign, so deduplication keeps D3 and moves
    D4's message flows onto it.
    """
    d1, d2 = _release(), _test_campaign()
    d3, d4 = _calibration("D3", "sensor team"), _calibration("D4", "supplier lab")
    node = {(d.id, n.name): n.id for d in (d1, d2, d3, d4) for n in d.nodes}
    flows = (
        MessageFlow("M1", node["D1", "Commission test campaign"], node["D2", "Receive test order"], "test order"),
        MessageFlow("M2", node["D2", "Send test report"], node["D1", "Review test report"], "test report"),
        MessageFlow("M3", node["D2", "Request calibration"], node["D4", "Start calibration"], "calibration request"),
        MessageFlow("M4", node["D4", "Confirm calibration"], node["D2", "Collect calibration data"], "calibration data"),
    )
    pools = (
        Pool("P1", "Vehicle project", ("D1",)),
        Pool("P2", "Test department", ("D2",)),
        Pool("P3", "Sensor team", ("D3",)),
        Pool("P4", "Supplier test lab", ("D4",)),
    )
    return ProcessModel(diagrams=(d1, d2, d3, d4), pools=pools, message_flows=flows)


def park_pilot_2level_model() -> ProcessModel:
    """Two-level pool-based model: a release process and two identical test campaigns.

    The external copy D3 is the one exchanging messages with D1; after
    deduplication D2 takes its place.
    """
    d1, d2 = _release(), _test_campaign()
    d3 = copy_diagram(d2, "D3", name="Park pilot test campaign (external)")
    node = {(d.id, n.name): n.id for d in (d1, d3) for n in d.nodes}
    flows = (
        MessageFlow("M1", node["D1", "Commission test campaign"], node["D3", "Receive test order"], "test order"),
        MessageFlow("M2", node["D3", "Send test report"], node["D1", "Review test report"], "test report"),
    )
    pools = (Pool("P1", "Vehicle project", ("D1",)), Pool("P2", "Test department", ("D2",)),
             Pool("P3", "External test house", ("D3",)))
    return ProcessModel(diagrams=(d1, d2, d3), pools=pools, message_flows=flows)


def park_pilot_event_model() -> ProcessModel:
    """Two-level event-based model with a timeline (rewards available)."""
    b1 = DiagramBuilder("R1", "Park pilot release", level=1, role="Project Manager")
    s = b1.start()
    scope, order = b1.task("Define test scope", days=5, wd=10), b1.throw("test_order", "Test order issued")
    report = b1.catch("test_report", "Test report received")
    decide = b1.xor("Release?")
    approve, rework = b1.task("Approve release", days=1, wd=2), b1.task("Plan rework", days=4, wd=8)
    b1.chain(s, scope, order, report, decide)
    b1.flow(decide, approve)
    b1.flow(decide, rework)
    b1.chain(approve, b1.end("released"))
    b1.chain(rework, b1.end("rework planned"))

    b2 = DiagramBuilder("R2", "Park pilot test campaign", level=2, role="Test Manager")
    s = b2.start()
    receive = b2.catch("test_order", "Test order received")
    run, evaluate = b2.task("Run parking scenarios", days=10, wd=30), b2.task("Evaluate results", days=3, wd=6)
    verdict, rerun = b2.xor("Scenarios passed?"), b2.task("Rerun failed scenarios", days=4, wd=12)
    send = b2.throw("test_report", "Test report sent")
    b2.chain(s, receive, run, evaluate, verdict)
    b2.flow(verdict, send, 0.8, "passed")
    b2.flow(verdict, rerun, 0.2, "failed")
    b2.flow(rerun, evaluate)
    b2.chain(send, b2.end())
    timeline = Timeline((("Test order received", 5), ("Test report sent", 25), ("released", 30)))
    return event_model(b1.build(), b2.build(), timeline=timeline)


def stuck_catcher_model() -> ProcessModel:
    """A catcher waiting for a signal its thrower may never send."""
    a = DiagramBuilder("A", "Thrower", role="Engineer")
    s, gw = a.start(), a.xor("notify?")
    t = a.throw("ready")
    e1, e2 = a.end("notified"), a.end("silent")
    a.chain(s, gw)
    a.flow(gw, t, 0.5)
    a.flow(gw, e2, 0.5)
    a.chain(t, e1)
    b = DiagramBuilder("B", "Catcher", role="Manager")
    b.chain(b.start(), b.catch("ready"), b.task("Proceed"), b.end())
    return event_model(a.build(), b.build())


def retry_loop_model() -> ProcessModel:
    """A task repeated with probability 0.5 until it succeeds."""
    b = DiagramBuilder("L", "Retry", role="Tester")
    s, t, gw, e = b.start(), b.task("Attempt", days=1, wd=1), b.xor("ok?"), b.end()
    b.chain(s, t, gw)
    b.flow(gw, e, 0.5)
    b.flow(gw, t, 0.5)
    return event_model(b.build(), timeline=Timeline())


def divergence_model() -> ProcessModel:
    """A nondeterministic choice between finishing and looping forever."""
    b = DiagramBuilder("N", "Divergent", role="Tester")
    s, gw, t, e = b.start(), b.xor("continue?"), b.task("Spin"), b.end()
    b.chain(s, gw)
    b.flow(gw, e)
    b.flow(gw, t)
    b.flow(t, gw)
    return event_model(b.build())


def sequential_tasks_model() -> ProcessModel:
    """Two tasks of 3 and 7 days in sequence."""
    b = DiagramBuilder("S", "Sequence", role="Engineer")
    b.chain(b.start(), b.task("First", days=3, wd=4), b.task("Second", days=7, wd=9), b.end())
    return event_model(b.build(), timeline=Timeline((("Second", 10),)))


def branching_cost_model() -> ProcessModel:
    """A fair coin choosing a task of cost 2 or of cost 4."""
    b = DiagramBuilder("C", "Branching", role="Engineer")
    s, gw = b.start(), b.xor("coin")
    cheap, dear = b.task("Cheap", days=2, wd=2), b.task("Expensive", days=4, wd=4)
    e1, e2 = b.end("end cheap"), b.end("end expensive")
    b.chain(s, gw)
    b.flow(gw, cheap, 0.5)
    b.flow(gw, dear, 0.5)
    b.chain(cheap, e1)
    b.chain(dear, e2)
    return event_model(b.build(), timeline=Timeline())


SAMPLES = {
    "park_pilot_2level": park_pilot_2level_model,
    "park_pilot_3level": park_pilot_pool_model,
    "park_pilot_timeline": park_pilot_event_model,
    "stuck_catcher": stuck_catcher_model,
}


class _RandomDiagram:
    """Random structured (block-nested) diagram with at most ``budget`` nodes."""

    def __init__(self, rng: random.Random, builder: DiagramBuilder, tag: str):
        self.rng = rng
        self.b = builder
        self.tag = tag
        self.count = 0

    def name(self, prefix: str) -> str:
        self.count += 1
        return f"{prefix}{self.tag}.{self.count}"

    def block(self, budget: int):
        """Return ``(entry, exit)`` node ids of a block using at most ``budget`` nodes."""
        rng, b = self.rng, self.b
        options = ["task"]
        if budget >= 2:
            options.append("seq")
        if budget >= 4:
            options += ["xor", "and", "loop"]
        pick = rng.choice(options)
        if pick == "task":
            t = b.task(self.name("T"), days=rng.randint(0, 5), wd=rng.randint(0, 9))
            return t, t
        if pick == "seq":
            first = rng.randint(1, budget - 1)
            e1, x1, used1 = self._sized(first)
            e2, x2, _ = self._sized(budget - used1)
            b.flow(x1, e2)
            return e1, x2
        if pick == "loop":
            merge, body, split = b.xor(self.name("G")), b.task(self.name("T"), days=1, wd=1), b.xor(self.name("G"))
            after = b.task(self.name("T"), days=1, wd=1)
            p = round(rng.uniform(0.1, 0.8), 2)
            b.chain(merge, body, split)
            b.flow(split, merge, p)
            b.flow(split, after, round(1 - p, 2))
            return merge, after
        split = b.xor(self.name("G")) if pick == "xor" else b.fork(self.name("G"))
        join = b.xor(self.name("G")) if pick == "xor" else b.fork(self.name("G"))
        inner = budget - 2
        left = rng.randint(1, inner - 1)
        e1, x1, used1 = self._sized(left)
        e2, x2, _ = self._sized(inner - used1)
        probabilistic = pick == "xor" and rng.random() < 0.5
        p = round(rng.uniform(0.1, 0.9), 2)
        b.flow(split, e1, p if probabilistic else None)
        b.flow(split, e2, round(1 - p, 2) if probabilistic else None)
        b.flow(x1, join)
        b.flow(x2, join)
        return split, join

    def _sized(self, budget: int):
        before = len(self.b.nodes)
        entry, exit_ = self.block(budget)
        return entry, exit_, len(self.b.nodes) - before


def random_pool_model(rng: random.Random, *, max_diagrams: int = 3, max_nodes: int = 10,
                      max_messages: int = 3, duplicate_probability: float = 0.35) -> ProcessModel:
    """Random valid pool-based model (each diagram in its own pool).

    Diagrams are block-structured, so every diagram run in isolation ends
    almost surely: loops exit with positive probability and unannotated
    choices never close a cycle.  Message flows connect tasks of different
    diagrams.  With ``duplicate_probability`` one diagram is a structural
    copy of another on a different level; only one copy of such a pair is
    ever a message-flow endpoint.
    """
    n = rng.randint(1, max_diagrams)
    duplicate = n >= 2 and rng.random() < duplicate_probability
    n_base = n - 1 if duplicate else n
    roles = ["Engineer", "Tester", "Manager", "Supplier"]
    diagrams = []
    for i in range(n_base):
        b = DiagramBuilder(f"D{i + 1}", level=rng.randint(1, 3), role=rng.choice(roles))
        gen = _RandomDiagram(rng, b, str(i + 1))
        start = b.start(f"start{i + 1}")
        entry, exit_ = gen.block(rng.randint(1, max_nodes - 2))
        b.chain(start, entry)
        b.chain(exit_, b.end(f"end{i + 1}"))
        diagrams.append(b.build())

    excluded: set[str] = set()
    if duplicate:
        original = rng.choice(diagrams)
        copy = copy_diagram(original, f"D{n}", name=f"copy of {original.id}",
                            level=original.level % 3 + 1)
        diagrams.append(copy)
        excluded.add(rng.choice([original.id, copy.id]))

    tasks = [(d.id, nd.id) for d in diagrams if d.id not in excluded
             for nd in d.nodes if nd.kind is NodeKind.TASK]
    flows, seen = [], set()
    if len({d for d, _ in tasks}) >= 2:
        for k in range(rng.randint(0, max_messages)):
            da, a = rng.choice(tasks)
            db, b_ = rng.choice([t for t in tasks if t[0] != da])
            if (a, b_) not in seen:
                seen.add((a, b_))
                flows.append(MessageFlow(f"M{k + 1}", a, b_, f"m{k + 1}"))
    pools = tuple(Pool(f"P{d.id}", f"pool {d.id}", (d.id,)) for d in diagrams)
    return ProcessModel(diagrams=tuple(diagrams), pools=pools, message_flows=tuple(flows))
