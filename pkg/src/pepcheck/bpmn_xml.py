"""Reading and writing BPMN 2.0 interchange XML.

Only the subset needed for process models is understood: ``definitions``,
``collaboration``/``participant``/``messageFlow``, ``process`` with its
``laneSet``, events, tasks, exclusive/parallel gateways and sequence flows.
Probabilities, task durations, abstraction levels and the timeline live in
the extension namespace :data:`EXT_NS`::

    <process id="D1" ext:level="2">
      <task id="t1" name="Plan" ext:durationDays="5" ext:effortWd="15"/>
      <sequenceFlow id="f1" sourceRef="gw" targetRef="t1" ext:probability="0.3"/>
    </process>
    <ext:timeline>
      <ext:milestone name="Review" day="30"/>
    </ext:timeline>

A pool holding several diagrams lists them in ``ext:processRefs`` on its
``participant``.  Diagram layout (BPMN DI) is skipped silently; any other
unknown element triggers an :class:`UnknownElementWarning` and is ignored.
"""

from __future__ import annotations

import math
import warnings
import xml.etree.ElementTree as ET

from .errors import ParseError, ValidationError
from .model import (Diagram, FlowNode, MessageFlow, NodeKind, Pool, ProcessModel,
                    SequenceFlow, Timeline, derive_event_links, validate)

__all__ = ["BPMN_NS", "EXT_NS", "UnknownElementWarning", "parse", "parse_file",
           "serialize", "build_model"]

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
EXT_NS = "urn:pepcheck:bpmn-ext:1"
_DI_NAMESPACES = {
    "http://www.omg.org/spec/BPMN/20100524/DI",
    "http://www.omg.org/spec/DD/20100524/DC",
    "http://www.omg.org/spec/DD/20100524/DI",
}

ET.register_namespace("bpmn", BPMN_NS)
ET.register_namespace("ext", EXT_NS)

_NODE_TAGS = {
    "startEvent": NodeKind.START,
    "endEvent": NodeKind.END,
    "task": NodeKind.TASK,
    "intermediateThrowEvent": NodeKind.THROW,
    "intermediateCatchEvent": NodeKind.CATCH,
    "exclusiveGateway": NodeKind.XOR,
    "parallelGateway": NodeKind.AND,
}
_TAG_OF_KIND = {kind: tag for tag, kind in _NODE_TAGS.items()}
# children that carry nothing the model needs
_SILENT = {"documentation", "extensionElements", "incoming", "outgoing",
           "conditionExpression", "text"}


class UnknownElementWarning(UserWarning):
    pass


def _split(tag: str) -> tuple[str, str]:
    if tag.startswith("{"):
        ns, local = tag[1:].split("}", 1)
        return ns, local
    return "", tag


def _ext(name: str) -> str:
    return f"{{{EXT_NS}}}{name}"


def _bpmn(name: str) -> str:
    return f"{{{BPMN_NS}}}{name}"


class _Reader:
    def __init__(self):
        self.ids: set[str] = set()
        self.signals: dict[str, str] = {}

    def warn(self, elem, where: str) -> None:
        ns, local = _split(elem.tag)
        if ns in _DI_NAMESPACES or local in _SILENT:
            return
        label = elem.get("id") or local
        warnings.warn(f"ignoring unsupported element <{local}> ({label}) in {where}",
                      UnknownElementWarning, stacklevel=4)

    def claim_id(self, elem) -> str:
        ident = elem.get("id")
        if not ident:
            raise ParseError(f"<{_split(elem.tag)[1]}> lacks the mandatory 'id' attribute")
        if ident in self.ids:
            raise ParseError("duplicate element id", ident)
        self.ids.add(ident)
        return ident

    @staticmethod
    def required(elem, attr: str, ident: str) -> str:
        value = elem.get(attr)
        if value is None or value == "":
            raise ParseError(f"missing mandatory attribute {attr!r}", ident)
        return value

    @staticmethod
    def number(elem, attr: str, ident: str, kind=float):
        raw = elem.get(attr)
        if raw is None:
            return None
        try:
            value = kind(raw.strip())
        except ValueError:
            raise ParseError(f"attribute {_split(attr)[1]!r} is not a number: {raw!r}", ident) from None
        if isinstance(value, float) and not math.isfinite(value):
            raise ParseError(f"attribute {_split(attr)[1]!r} must be finite", ident)
        return value

    def node(self, elem, kind: NodeKind) -> FlowNode:
        ident = self.claim_id(elem)
        signal = None
        for child in elem:
            local = _split(child.tag)[1]
            if local == "signalEventDefinition":
                ref = child.get("signalRef")
                if not ref:
                    raise ParseError("signalEventDefinition lacks 'signalRef'", ident)
                signal = ref
            else:
                self.warn(child, ident)
        return FlowNode(
            id=ident,
            name=elem.get("name") or ident,
            kind=kind,
            signal=signal,
            duration_days=self.number(elem, _ext("durationDays"), ident),
            effort_wd=self.number(elem, _ext("effortWd"), ident),
        )

    def process(self, elem) -> Diagram:
        ident = self.claim_id(elem)
        nodes, flows, role = [], [], ""
        for child in elem:
            ns, local = _split(child.tag)
            if local in _NODE_TAGS and ns in (BPMN_NS, ""):
                nodes.append(self.node(child, _NODE_TAGS[local]))
            elif local == "sequenceFlow" and ns in (BPMN_NS, ""):
                fid = self.claim_id(child)
                flows.append(SequenceFlow(
                    id=fid,
                    source=self.required(child, "sourceRef", fid),
                    target=self.required(child, "targetRef", fid),
                    probability=self.number(child, _ext("probability"), fid),
                    label=child.get("name"),
                ))
                for sub in child:
                    self.warn(sub, fid)
            elif local == "laneSet":
                lanes = [lane for lane in child if _split(lane.tag)[1] == "lane"]
                if lanes and not role:
                    role = lanes[0].get("name", "")
                if len(lanes) > 1:
                    warnings.warn(f"process {ident} has {len(lanes)} lanes; using "
                                  f"{role!r} as its role", UnknownElementWarning, stacklevel=3)
            else:
                self.warn(child, ident)
        level = self.number(elem, _ext("level"), ident, int)
        return Diagram(id=ident, name=elem.get("name", ""), nodes=tuple(nodes),
                       flows=tuple(flows), level=1 if level is None else level, role=role)

    def timeline(self, elem) -> Timeline:
        milestones = []
        for child in elem:
            if _split(child.tag) != (EXT_NS, "milestone"):
                self.warn(child, "timeline")
                continue
            name = self.required(child, "name", "timeline")
            day = self.number(child, "day", name, int)
            if day is None:
                raise ParseError("milestone lacks 'day'", name)
            milestones.append((name, day))
        return Timeline(tuple(milestones))


def parse(doc: str | bytes) -> ProcessModel:
    """Parse a BPMN XML document into a validated :class:`ProcessModel`.

    Raises
    ------
    ParseError
        The document is not well-formed XML, an element lacks a mandatory
        attribute, or an id occurs twice.
    ValidationError
        The resulting model breaks a core invariant; ``violations`` lists them.
    """
    model = build_model(doc)
    violations = validate(model)
    if violations:
        raise ValidationError(violations)
    return model


def build_model(doc: str | bytes) -> ProcessModel:
    """Like :func:`parse` but without the final validation step."""
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    if _split(root.tag)[1] != "definitions":
        raise ParseError(f"root element must be <definitions>, got <{_split(root.tag)[1]}>")

    reader = _Reader()
    diagrams, pools, message_flows = [], [], []
    timeline = None
    for child in root:
        ns, local = _split(child.tag)
        if ns == EXT_NS and local == "timeline":
            timeline = reader.timeline(child)
        elif local == "process":
            diagrams.append(reader.process(child))
        elif local == "signal":
            sid = reader.claim_id(child)
            reader.signals[sid] = child.get("name") or sid
        elif local == "collaboration":
            for sub in child:
                sub_local = _split(sub.tag)[1]
                if sub_local == "participant":
                    pid = reader.claim_id(sub)
                    refs = sub.get(_ext("processRefs"))
                    if refs is not None:
                        ids = tuple(refs.split())
                    elif sub.get("processRef"):
                        ids = (sub.get("processRef"),)
                    else:
                        ids = ()
                    pools.append(Pool(pid, sub.get("name", ""), ids))
                elif sub_local == "messageFlow":
                    mid = reader.claim_id(sub)
                    message_flows.append(MessageFlow(
                        mid, reader.required(sub, "sourceRef", mid),
                        reader.required(sub, "targetRef", mid), sub.get("name", "")))
                else:
                    reader.warn(sub, "collaboration")
        else:
            reader.warn(child, "definitions")

    # signal event definitions reference <signal> ids; the model keeps names
    diagrams = [
        Diagram(d.id, d.name, tuple(
            n if n.signal is None else FlowNode(n.id, n.name, n.kind, reader.signals.get(n.signal, n.signal),
                                                n.duration_days, n.effort_wd)
            for n in d.nodes), d.flows, d.level, d.role)
        for d in diagrams
    ]
    return ProcessModel(
        diagrams=tuple(diagrams),
        pools=tuple(pools),
        message_flows=tuple(message_flows),
        event_links=derive_event_links(diagrams),
        timeline=timeline,
    )


def parse_file(path) -> ProcessModel:
    with open(path, "rb") as fh:
        return parse(fh.read())


def _num(value: float) -> str:
    return repr(float(value))


def serialize(model: ProcessModel) -> str:
    """Write ``model`` as BPMN XML; :func:`parse` restores an equal model."""
    root = ET.Element(_bpmn("definitions"), {"id": "definitions"})

    signal_names = sorted({n.signal for d in model.diagrams for n in d.nodes if n.signal is not None})
    signal_ids = {name: f"Signal_{i}" for i, name in enumerate(signal_names, 1)}

    if model.pools or model.message_flows:
        collab = ET.SubElement(root, _bpmn("collaboration"), {"id": "collaboration"})
        for p in model.pools:
            attrs = {"id": p.id, "name": p.name}
            if p.diagram_ids:
                attrs["processRef"] = p.diagram_ids[0]
            if len(p.diagram_ids) != 1:
                attrs[_ext("processRefs")] = " ".join(p.diagram_ids)
            ET.SubElement(collab, _bpmn("participant"), attrs)
        for mf in model.message_flows:
            ET.SubElement(collab, _bpmn("messageFlow"),
                          {"id": mf.id, "sourceRef": mf.source, "targetRef": mf.target, "name": mf.name})

    for name in signal_names:
        ET.SubElement(root, _bpmn("signal"), {"id": signal_ids[name], "name": name})

    for d in model.diagrams:
        proc = ET.SubElement(root, _bpmn("process"),
                             {"id": d.id, "name": d.name, _ext("level"): str(d.level)})
        if d.role:
            lanes = ET.SubElement(proc, _bpmn("laneSet"), {"id": f"{d.id}__laneSet"})
            lane = ET.SubElement(lanes, _bpmn("lane"), {"id": f"{d.id}__lane", "name": d.role})
            for n in d.nodes:
                ET.SubElement(lane, _bpmn("flowNodeRef")).text = n.id
        for n in d.nodes:
            attrs = {"id": n.id, "name": n.name}
            if n.duration_days is not None:
                attrs[_ext("durationDays")] = _num(n.duration_days)
            if n.effort_wd is not None:
                attrs[_ext("effortWd")] = _num(n.effort_wd)
            elem = ET.SubElement(proc, _bpmn(_TAG_OF_KIND[n.kind]), attrs)
            if n.signal is not None:
                ET.SubElement(elem, _bpmn("signalEventDefinition"), {"signalRef": signal_ids[n.signal]})
        for f in d.flows:
            attrs = {"id": f.id, "sourceRef": f.source, "targetRef": f.target}
            if f.label is not None:
                attrs["name"] = f.label
            if f.probability is not None:
                attrs[_ext("probability")] = _num(f.probability)
            ET.SubElement(proc, _bpmn("sequenceFlow"), attrs)

    if model.timeline is not None:
        tl = ET.SubElement(root, _ext("timeline"))
        for name, day in model.timeline.milestones:
            ET.SubElement(tl, _ext("milestone"), {"name": name, "day": str(int(day))})

    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
