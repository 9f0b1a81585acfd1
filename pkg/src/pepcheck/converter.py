"""Conversion of pool-based models into event-based ones.

The conversion removes structurally redundant diagrams, replaces each
message flow by a throw/catch signal pair spliced into the sequence flows of
the two diagrams it connects, and finally drops the pools.  The module also
builds the single merged diagram that serves as the pool-based size
baseline.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, replace

from .differentiator import Dialect, classify_dialect
from .errors import SpliceError
from .model import (Diagram, FlowNode, MessageFlow, NodeKind, ProcessModel,
                    SequenceFlow, derive_event_links)

__all__ = ["CanonicalForm", "DedupReport", "canonical_form", "deduplicate_processes",
           "replace_message_flows", "remove_pools", "convert_to_event_based",
           "merge_diagrams", "signal_name", "MERGED_ID"]

MERGED_ID = "__merged__"


@dataclass(frozen=True)
class CanonicalForm:
    text: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


def _opt(value) -> str:
    if value is None:
        return ""
    return repr(float(value)) if isinstance(value, (int, float)) else str(value)


def canonical_form(d: Diagram) -> CanonicalForm:
    """Fingerprint ``d`` independently of node ids and list order.

    Covers the role, every node's kind/name/signal/duration/effort and the
    sequence-flow relation over node names with probabilities and labels.
    The diagram's own id, name and level are deliberately left out so that
    copies on different abstraction levels compare equal.
    """
    name_of = {n.id: n.name for n in d.nodes}
    nodes = sorted(
        (n.kind.value, n.name, _opt(n.signal), _opt(n.duration_days), _opt(n.effort_wd))
        for n in d.nodes
    )
    flows = sorted(
        (name_of.get(f.source, "?" + f.source), name_of.get(f.target, "?" + f.target),
         _opt(f.probability), _opt(f.label))
        for f in d.flows
    )
    return CanonicalForm(json.dumps({"role": d.role, "nodes": nodes, "flows": flows},
                                    ensure_ascii=False, separators=(",", ":")))


@dataclass(frozen=True)
class DedupReport:
    """Which diagrams were removed in favour of which representative."""

    mappings: tuple[tuple[str, str], ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def removed(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.mappings)

    def to_text(self) -> str:
        lines = ["# removed -> kept"]
        lines += [f"{removed} -> {kept}" for removed, kept in self.mappings]
        if not self.mappings:
            lines.append("(no redundant processes)")
        if self.notes:
            lines.append("# notes")
            lines += list(self.notes)
        return "\n".join(lines) + "\n"


def deduplicate_processes(model: ProcessModel) -> tuple[ProcessModel, DedupReport]:
    """Keep one diagram per group of structurally equal diagrams.

    The survivor of a group is the diagram on the lowest abstraction level,
    ties going to the smallest id.  Message flows touching a removed diagram
    are moved to the same-named node of the survivor.
    """
    groups: dict[str, list[Diagram]] = defaultdict(list)
    for d in model.diagrams:
        groups[canonical_form(d).text].append(d)

    kept_for: dict[str, str] = {}
    mappings = []
    for members in groups.values():
        keeper = min(members, key=lambda d: (d.level, d.id))
        for d in sorted(members, key=lambda d: d.id):
            if d.id != keeper.id:
                kept_for[d.id] = keeper.id
                mappings.append((d.id, keeper.id))
    if not mappings:
        return model, DedupReport()

    notes = []
    touched = defaultdict(set)  # keeper id -> group members with message flows
    for mf in model.message_flows:
        for end in (mf.source, mf.target):
            did = model.diagram_of(end).id if model.has_node(end) else None
            if did is not None:
                touched[kept_for.get(did, did)].add(did)
    for keeper, members in sorted(touched.items()):
        if len(members) > 1:
            notes.append(f"conflict: diagrams {', '.join(sorted(members))} all carry message "
                         f"flows; all of them now attach to {keeper}")

    def rewire(node_id: str) -> str:
        if not model.has_node(node_id):
            return node_id
        home = model.diagram_of(node_id)
        if home.id not in kept_for:
            return node_id
        keeper = model.diagram(kept_for[home.id])
        return keeper.node_by_name(home.node(node_id).name).id

    flows, seen = [], set()
    for mf in model.message_flows:
        src, tgt = rewire(mf.source), rewire(mf.target)
        if (src, tgt) != (mf.source, mf.target):
            notes.append(f"rewired {mf.id}: {mf.source}->{mf.target} becomes {src}->{tgt}")
        if (src, tgt) in seen:
            notes.append(f"dropped {mf.id}: duplicates an existing message flow {src}->{tgt}")
            continue
        if model.has_node(src) and model.has_node(tgt) and \
                model.diagram_of(src).id == model.diagram_of(tgt).id:
            notes.append(f"dropped {mf.id}: both ends now lie in {model.diagram_of(src).id}")
            continue
        seen.add((src, tgt))
        flows.append(MessageFlow(mf.id, src, tgt, mf.name))

    diagrams = tuple(d for d in model.diagrams if d.id not in kept_for)
    pools = []
    for p in model.pools:
        ids = tuple(i for i in p.diagram_ids if i not in kept_for)
        if ids or not p.diagram_ids:
            pools.append(replace(p, diagram_ids=ids))
        else:
            notes.append(f"dropped pool {p.id}: all its diagrams were redundant")
    result = ProcessModel(
        diagrams=diagrams,
        pools=tuple(pools),
        message_flows=tuple(flows),
        event_links=derive_event_links(diagrams) if model.event_links else (),
        timeline=model.timeline,
    )
    return result, DedupReport(tuple(mappings), tuple(notes))


def signal_name(source_diagram: Diagram, source: FlowNode, target: FlowNode) -> str:
    return f"msg_{source_diagram.id}_{source.name}_{target.name}"


class _Editor:
    """Mutable working copy of one diagram used while splicing events."""

    def __init__(self, d: Diagram, taken_ids: set[str]):
        self.d = d
        self.nodes = list(d.nodes)
        self.flows = list(d.flows)
        self.taken = taken_ids
        self.names = {n.name for n in d.nodes}

    def fresh_id(self, base: str) -> str:
        ident, k = base, 1
        while ident in self.taken:
            k += 1
            ident = f"{base}_{k}"
        self.taken.add(ident)
        return ident

    def fresh_name(self, base: str) -> str:
        name, k = base, 1
        while name in self.names:
            k += 1
            name = f"{base} ({k})"
        self.names.add(name)
        return name

    def new_event(self, kind: NodeKind, anchor: str, signal: str) -> FlowNode:
        tag = "throw" if kind is NodeKind.THROW else "catch"
        node = FlowNode(self.fresh_id(f"{anchor}__{tag}"), self.fresh_name(f"{tag} {signal}"), kind, signal)
        self.nodes.append(node)
        return node

    def connect(self, source: str, target: str) -> None:
        self.flows.append(SequenceFlow(self.fresh_id(f"{target}__in"), source, target))

    def splice_after(self, anchor: str, chain: list[FlowNode]) -> None:
        last = chain[-1].id
        self.flows = [replace(f, source=last) if f.source == anchor else f for f in self.flows]
        prev = anchor
        for node in chain:
            self.connect(prev, node.id)
            prev = node.id

    def splice_before(self, anchor: str, chain: list[FlowNode]) -> None:
        first = chain[0].id
        self.flows = [replace(f, target=first) if f.target == anchor else f for f in self.flows]
        for a, b in zip(chain, chain[1:]):
            self.connect(a.id, b.id)
        self.connect(chain[-1].id, anchor)

    def set_signal(self, node_id: str, signal: str) -> None:
        self.nodes = [replace(n, signal=signal) if n.id == node_id else n for n in self.nodes]

    def build(self) -> Diagram:
        return replace(self.d, nodes=tuple(self.nodes), flows=tuple(self.flows))


def replace_message_flows(model: ProcessModel) -> ProcessModel:
    """Turn every message flow into a throw/catch event pair.

    For a flow from node ``a`` to node ``b`` a throw event is inserted right
    after ``a`` and a catch event right before ``b``; both carry the signal
    ``msg_<diagram of a>_<name of a>_<name of b>``.  Flows from one source to
    equally named targets in different diagrams share a single signal.
    Several throws after the same node are chained in target-name order.
    """
    if not model.message_flows:
        return model

    taken = {n.id for d in model.diagrams for n in d.nodes} | \
            {f.id for d in model.diagrams for f in d.flows} | {d.id for d in model.diagrams}
    existing_signals = {n.signal for d in model.diagrams for n in d.nodes if n.signal}
    editors = {d.id: _Editor(d, taken) for d in model.diagrams}

    by_signal: dict[str, tuple[str, list[str]]] = {}
    signal_of_pair: dict[tuple[str, str], str] = {}
    for mf in model.message_flows:
        if (mf.source, mf.target) in signal_of_pair:
            continue
        src_d = model.diagram_of(mf.source)
        base = signal_name(src_d, src_d.node(mf.source), model.diagram_of(mf.target).node(mf.target))
        signal = base
        k = 1
        while signal in existing_signals or (signal in by_signal and by_signal[signal][0] != mf.source):
            k += 1
            signal = f"{base}_{k}"
        by_signal.setdefault(signal, (mf.source, []))[1].append(mf.target)
        signal_of_pair[(mf.source, mf.target)] = signal

    def target_key(signal):
        _, targets = by_signal[signal]
        return (min(model.diagram_of(t).node(t).name for t in targets), signal)

    throws_at: dict[str, list[str]] = defaultdict(list)
    catches_at: dict[str, list[str]] = defaultdict(list)
    for signal, (source, targets) in by_signal.items():
        throws_at[source].append(signal)
        for t in targets:
            catches_at[t].append(signal)

    for source in sorted(throws_at):
        home = model.diagram_of(source)
        node = home.node(source)
        signals = sorted(throws_at[source], key=target_key)
        ed = editors[home.id]
        if node.is_gateway:
            raise SpliceError("message flows cannot leave a gateway", source)
        if node.kind is NodeKind.END:
            if node.signal is None:
                ed.set_signal(source, signals.pop(0))
            if signals:
                if not home.incoming(source):
                    raise SpliceError("end event has no incoming flow to splice a throw event into", source)
                ed.splice_before(source, [ed.new_event(NodeKind.THROW, source, s) for s in signals])
            continue
        if not home.outgoing(source):
            raise SpliceError(f"{node.kind} has no outgoing flow to splice a throw event into", source)
        ed.splice_after(source, [ed.new_event(NodeKind.THROW, source, s) for s in signals])

    for target in sorted(catches_at):
        home = model.diagram_of(target)
        node = home.node(target)
        if node.is_gateway:
            raise SpliceError("message flows cannot enter a gateway", target)
        if not home.incoming(target):
            raise SpliceError(f"{node.kind} has no incoming flow to splice a catch event into", target)
        ed = editors[home.id]
        ed.splice_before(target, [ed.new_event(NodeKind.CATCH, target, s) for s in sorted(catches_at[target])])

    diagrams = tuple(editors[d.id].build() for d in model.diagrams)
    return replace(model, diagrams=diagrams, message_flows=(),
                   event_links=derive_event_links(diagrams))


def remove_pools(model: ProcessModel) -> ProcessModel:
    """Drop all pools; every diagram then stands on its own."""
    return replace(model, pools=())


def convert_to_event_based(model: ProcessModel) -> tuple[ProcessModel, DedupReport]:
    """Full pool-based to event-based conversion.

    Runs :func:`deduplicate_processes`, :func:`replace_message_flows` and
    :func:`remove_pools` in that order.
    """
    if classify_dialect(model) is not Dialect.POOL_BASED:
        raise ValueError("convert_to_event_based expects a pool-based model")
    deduped, report = deduplicate_processes(model)
    return remove_pools(replace_message_flows(deduped)), report


def merge_diagrams(model: ProcessModel) -> Diagram:
    """Flatten a pool-based model into one diagram (the size baseline).

    A fresh start event forks through a parallel gateway into the start
    event of every diagram; message flows become throw/catch pairs inside
    the merged diagram.  Node names are prefixed with their diagram id so
    they stay unique.  No redundancy elimination takes place.
    """
    spliced = replace_message_flows(model)
    taken = {n.id for d in spliced.diagrams for n in d.nodes}
    start_id, fork_id = "__merged_start", "__merged_fork"
    assert start_id not in taken and fork_id not in taken

    nodes = [FlowNode(start_id, "merged start", NodeKind.START),
             FlowNode(fork_id, "merged fork", NodeKind.AND)]
    flows = [SequenceFlow(f"{fork_id}__in", start_id, fork_id)]
    for d in spliced.diagrams:
        flows.append(SequenceFlow(f"{fork_id}__{d.id}", fork_id, d.start.id))
    for d in spliced.diagrams:
        nodes += [replace(n, name=f"{d.id}/{n.name}") for n in d.nodes]
        flows += d.flows
    return Diagram(
        id=MERGED_ID,
        name="merged",
        nodes=tuple(nodes),
        flows=tuple(flows),
        level=spliced.abstraction_levels,
        role="merged",
    )
