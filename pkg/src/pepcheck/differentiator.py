"""Classification of a model as pool-based or event-based BPMN."""

from __future__ import annotations

from enum import Enum

from .errors import AmbiguousDialect
from .model import ProcessModel


class Dialect(str, Enum):
    POOL_BASED = "PoolBased"
    EVENT_BASED = "EventBased"

    def __str__(self) -> str:
        return self.value


def classify_dialect(model: ProcessModel) -> Dialect:
    """Return the dialect of ``model``.

    Pools or message flows mark a pool-based model.  Everything else,
    including a lone diagram with no communication at all, is event-based,
    which lets the pipeline skip conversion.
    """
    if model.message_flows and model.event_links:
        raise AmbiguousDialect("model has both message flows and event links")
    if model.pools or model.message_flows:
        return Dialect.POOL_BASED
    return Dialect.EVENT_BASED
