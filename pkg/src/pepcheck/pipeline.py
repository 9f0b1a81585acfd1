"""End-to-end helpers: classify, convert, compile and compose."""

from __future__ import annotations

from dataclasses import dataclass, field

from .converter import DedupReport, convert_to_event_based, merge_diagrams
from .differentiator import Dialect, classify_dialect
from .generator import (DEFAULT_MAX_STATES, ComposedMdp, MdpModule, RewardStructure,
                        attach_rewards, compose_modules, generate_module, milestone_labels)
from .model import EventLink, ProcessModel, derive_event_links
from .prism import emit_model

__all__ = ["Prepared", "Compiled", "prepare", "compile_model", "compile_baseline", "build_mdp",
           "build_baseline_mdp"]


@dataclass
class Prepared:
    model: ProcessModel
    dialect: Dialect
    report: DedupReport | None = None


@dataclass
class Compiled:
    modules: list[MdpModule]
    links: tuple[EventLink, ...]
    rewards: list[RewardStructure] = field(default_factory=list)
    labels: dict = field(default_factory=dict)

    def compose(self, max_states: int = DEFAULT_MAX_STATES) -> ComposedMdp:
        return compose_modules(self.modules, self.links, self.rewards,
                               labels=self.labels, max_states=max_states)

    def emit(self) -> str:
        return emit_model(self.modules, self.rewards, self.links, self.labels)


def prepare(model: ProcessModel) -> Prepared:
    """Classify ``model`` and convert it when it is pool-based."""
    dialect = classify_dialect(model)
    if dialect is Dialect.POOL_BASED:
        converted, report = convert_to_event_based(model)
        return Prepared(converted, dialect, report)
    return Prepared(model, dialect)


def compile_model(model: ProcessModel, *, max_locations: int = DEFAULT_MAX_STATES) -> Compiled:
    """One module per diagram of an event-based model, plus rewards and milestone labels."""
    modules = [generate_module(d, model.event_links, max_locations=max_locations)
               for d in model.diagrams]
    return Compiled(modules, model.event_links, attach_rewards(modules, model),
                    milestone_labels(modules, model))


def compile_baseline(model: ProcessModel, *, max_locations: int = DEFAULT_MAX_STATES) -> Compiled:
    """The single merged-diagram module used as the pool-based size baseline."""
    merged = merge_diagrams(model)
    links = derive_event_links([merged])
    module = generate_module(merged, links, max_locations=max_locations)
    return Compiled([module], links, attach_rewards([module], model))


def build_mdp(model: ProcessModel, *, max_states: int = DEFAULT_MAX_STATES) -> ComposedMdp:
    """Convert if needed, compile and compose ``model``."""
    prepared = prepare(model)
    return compile_model(prepared.model, max_locations=max_states).compose(max_states)


def build_baseline_mdp(model: ProcessModel, *, max_states: int = DEFAULT_MAX_STATES) -> ComposedMdp:
    return compile_baseline(model, max_locations=max_states).compose(max_states)
