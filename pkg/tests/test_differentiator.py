import pytest

from pepcheck.differentiator import Dialect, classify_dialect
from pepcheck.errors import AmbiguousDialect
from pepcheck.model import EventLink, ProcessModel
from pepcheck.synthetic import DiagramBuilder, event_model, park_pilot_event_model


def _single(diagram_id):
    b = DiagramBuilder(diagram_id)
    b.chain(b.start(), b.task("t"), b.end())
    return b.build()


class TestClassifyDialect:
    def test_pools_and_message_flow(self, two_pool_model):
        assert classify_dialect(two_pool_model) is Dialect.POOL_BASED

    def test_three_event_links(self):
        a = DiagramBuilder("A")
        a.chain(a.start(), a.throw("x"), a.throw("y"), a.throw("z"), a.end())
        b = DiagramBuilder("B")
        b.chain(b.start(), b.catch("x"), b.catch("y"), b.catch("z"), b.end())
        model = event_model(a.build(), b.build())
        assert len(model.event_links) == 3
        assert classify_dialect(model) is Dialect.EVENT_BASED

    def test_single_plain_diagram(self):
        assert classify_dialect(ProcessModel(diagrams=(_single("A"),))) is Dialect.EVENT_BASED

    def test_bundled_event_sample(self):
        assert classify_dialect(park_pilot_event_model()) is Dialect.EVENT_BASED

    def test_pools_without_message_flows(self, two_pool_model):
        from dataclasses import replace
        assert classify_dialect(replace(two_pool_model, message_flows=())) is Dialect.POOL_BASED

    def test_both_markers(self, two_pool_model):
        from dataclasses import replace
        link = EventLink("s", ("A", "A_2"), (("B", "B_2"),))
        with pytest.raises(AmbiguousDialect):
            classify_dialect(replace(two_pool_model, event_links=(link,)))

    def test_str(self):
        assert str(Dialect.POOL_BASED) == "PoolBased"
