import random
from importlib import resources

import pytest

from pepcheck.bpmn_xml import parse_file, serialize
from pepcheck.converter import deduplicate_processes
from pepcheck.differentiator import Dialect, classify_dialect
from pepcheck.model import NodeKind, validate
from pepcheck.pipeline import build_baseline_mdp, build_mdp
from pepcheck.synthetic import SAMPLES, DiagramBuilder, park_pilot_pool_model, random_pool_model


@pytest.mark.parametrize("name", sorted(SAMPLES))
def test_bundled_file_matches_builder(name):
    path = resources.files("pepcheck") / "data" / f"{name}.bpmn"
    assert path.read_text(encoding="utf-8") == serialize(SAMPLES[name]())
    assert parse_file(path) == SAMPLES[name]()


def test_builder_refs():
    b = DiagramBuilder("X")
    t = b.task("work")
    assert b.ref("work") == t == "X_1"


def test_three_level_sample_shape():
    model = park_pilot_pool_model()
    kinds = [n for d in model.diagrams for n in d.nodes]
    gateways = [n for n in kinds if n.kind is NodeKind.XOR]
    assert len(model.diagrams) >= 3 and model.abstraction_levels == 3
    assert len(model.message_flows) >= 2
    probabilistic = {f.source for d in model.diagrams for f in d.flows if f.probability is not None}
    assert any(g.id in probabilistic for g in gateways)
    assert any(g.id not in probabilistic for g in gateways)
    assert deduplicate_processes(model)[1].removed


class TestRandomModels:
    @pytest.mark.parametrize("seed", range(0, 240, 11))
    def test_valid_and_pool_based(self, seed):
        model = random_pool_model(random.Random(seed))
        assert validate(model) == []
        assert classify_dialect(model) is Dialect.POOL_BASED
        assert len(model.diagrams) <= 3
        assert all(len(d.nodes) <= 10 for d in model.diagrams)

    def test_reproducible(self):
        assert random_pool_model(random.Random(5)) == random_pool_model(random.Random(5))

    def test_variety(self, random_models):
        assert sum(bool(m.message_flows) for m in random_models) > 50
        assert sum(bool(deduplicate_processes(m)[1].removed) for m in random_models) > 30
        kinds = {n.kind for m in random_models for d in m.diagrams for n in d.nodes}
        assert {NodeKind.XOR, NodeKind.AND, NodeKind.TASK} <= kinds


@pytest.mark.parametrize("name", ["park_pilot_2level", "park_pilot_3level"])
def test_event_based_is_smaller(name):
    model = SAMPLES[name]()
    assert build_mdp(model).num_states <= build_baseline_mdp(model).num_states
