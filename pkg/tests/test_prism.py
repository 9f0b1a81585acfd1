import math
import random

import pytest

from pepcheck import engine
from pepcheck.errors import EmitError
from pepcheck.generator import Command, MdpModule, compose_modules, generate_module
from pepcheck.model import ProcessModel, Timeline
from pepcheck.pipeline import compile_baseline, compile_model, prepare
from pepcheck.prism import Namer, emit_model, emit_properties, read_model
from pepcheck.synthetic import (SAMPLES, DiagramBuilder, branching_cost_model, park_pilot_event_model,
                                random_pool_model, sequential_tasks_model)

from oracles import choice_signature

LINEAR_GOLDEN = """\
mdp

module L
  s_L : [0..3] init 0;
  [] s_L=0 -> (s_L'=1);
  [] s_L=1 -> (s_L'=2);
  [] s_L=2 -> (s_L'=3);
endmodule

label "done_all" = s_L=3;
"""

SEQUENCE_GOLDEN = """\
mdp

module S_
  s_S : [0..4] init 0;
  [] s_S=0 -> (s_S'=1);
  [r_S_1] s_S=1 -> (s_S'=2);
  [r_S_2] s_S=2 -> (s_S'=3);
  [] s_S=3 -> (s_S'=4);
endmodule

rewards "days"
  [r_S_1] s_S=1 : 3;
  [r_S_2] s_S=2 : 7;
endrewards

rewards "wd"
  [r_S_1] s_S=1 : 4;
  [r_S_2] s_S=2 : 9;
endrewards

label "done_all" = s_S=4;
label "Second" = s_S=2;
"""


def linear_module(diagram_id="L"):
    b = DiagramBuilder(diagram_id)
    b.chain(b.start(), b.task("t1"), b.end())
    return generate_module(b.build())


def all_fixtures():
    models = {name: make() for name, make in SAMPLES.items()}
    models["sequential"] = sequential_tasks_model()
    models["branching"] = branching_cost_model()
    for seed in range(0, 240, 4):
        models[f"random{seed}"] = random_pool_model(random.Random(seed))
    compiled = {}
    for name, model in models.items():
        compiled[name] = compile_model(prepare(model).model)
        if prepare(model).report is not None:
            compiled[f"{name}-merged"] = compile_baseline(model)
    return compiled


FIXTURES = all_fixtures()


class TestEmitModel:
    def test_linear_golden(self):
        assert emit_model([linear_module()]) == LINEAR_GOLDEN

    def test_rewards_golden(self):
        compiled = compile_model(sequential_tasks_model())
        assert compiled.emit() == SEQUENCE_GOLDEN

    def test_probabilistic_branch(self):
        b = DiagramBuilder("G")
        s, gw, e1, e2 = b.start(), b.xor(), b.end("e1"), b.end("e2")
        b.chain(s, gw)
        b.flow(gw, e1, 0.3)
        b.flow(gw, e2, 0.7)
        text = emit_model([generate_module(b.build())])
        assert "[] s_G=1 -> 0.3 : (s_G'=2) + 0.7 : (s_G'=3);" in text

    def test_no_rewards_block_without_rewards(self):
        assert "rewards" not in emit_model([linear_module()])

    def test_signals_are_shared_labels(self):
        text = compile_model(park_pilot_event_model()).emit()
        assert text.count("[test_order]") == 2
        assert text.count("[test_report]") == 2

    def test_keyword_module_name(self):
        text = emit_model([linear_module("A")])
        assert "module A_\n" in text
        assert "s_A : [0..3]" in text

    def test_milestone_labels(self):
        text = compile_model(park_pilot_event_model()).emit()
        assert 'label "Test_order_received" = s_R2=1;' in text

    def test_empty_label_is_false(self):
        m = linear_module()
        assert 'label "never" = false;' in emit_model([m], labels={"never": {}})

    def test_non_finite_probability(self):
        bad = MdpModule("X", "s_X", 2, 0, 1, (Command(None, 0, ((math.nan, 1), (0.5, 0)), "x"),))
        with pytest.raises(EmitError):
            emit_model([bad])

    def test_needs_modules(self):
        with pytest.raises(ValueError):
            emit_model([])

    @pytest.mark.parametrize("name", sorted(FIXTURES))
    def test_deterministic(self, name):
        assert FIXTURES[name].emit() == FIXTURES[name].emit()


class TestNamer:
    @pytest.mark.parametrize("raw, expected", [
        ("plain", "plain"),
        ("Test order received", "Test_order_received"),
        ("9lives", "_9lives"),
        ("mdp", "mdp_"),
        ("Pmax", "Pmax_"),
        ("", "_"),
        ("msg_D1_T1.4_T2.1", "msg_D1_T1_4_T2_1"),
    ])
    def test_sanitise(self, raw, expected):
        assert Namer()(raw) == expected

    def test_collisions(self):
        ident = Namer()
        assert [ident("a b"), ident("a-b"), ident("a_b"), ident("a b")] == ["a_b", "a_b_2", "a_b_3", "a_b"]

    def test_reserved(self):
        assert Namer(reserved=["done_all"])("done_all") == "done_all_2"


class TestEmitProperties:
    def test_with_timeline(self):
        text = emit_properties(ProcessModel(timeline=Timeline()))
        formulas = [line for line in text.splitlines() if line and not line.startswith("//")]
        assert formulas == [
            'Pmin=? [ F "done_all" ]',
            'Pmax=? [ F "done_all" ]',
            'filter(forall, Pmax>0 [ F "done_all" ])',
            'Rmin{"days"}=? [ F "done_all" ]',
            'Rmax{"wd"}=? [ F "done_all" ]',
        ]

    def test_without_timeline(self):
        text = emit_properties(ProcessModel())
        assert [line for line in text.splitlines() if line.startswith("//")] == [
            "// phi1: process completes with probability 1",
            "// phi2: process can be performed to completion",
            "// phi3: no reachable state deviates from completion",
        ]

    def test_phi1_exact(self):
        assert emit_properties(ProcessModel()).splitlines()[1] == 'Pmin=? [ F "done_all" ]'


class TestReadModel:
    @pytest.mark.parametrize("name", sorted(FIXTURES))
    def test_read_emit_isomorphism(self, name):
        compiled = FIXTURES[name]
        original = compiled.compose()
        back = read_model(compiled.emit())
        rebuilt = compose_modules(back.modules, (), back.rewards)
        assert rebuilt.states[rebuilt.initial] == original.states[original.initial]
        assert [m.state_var for m in back.modules] == [m.state_var for m in compiled.modules]
        assert [m.done for m in back.modules] == [m.done for m in compiled.modules]
        assert choice_signature(rebuilt) == choice_signature(original)
        assert {rebuilt.states[i] for i in rebuilt.labels["done_all"]} == \
            {original.states[i] for i in original.labels["done_all"]}
        for mode in ("min", "max"):
            assert math.isclose(engine.reach_probability(rebuilt, "done_all", mode),
                                engine.reach_probability(original, "done_all", mode), abs_tol=1e-12)

    def test_labels(self):
        compiled = compile_model(park_pilot_event_model())
        back = read_model(compiled.emit())
        assert back.labels["released"] == {"R1": frozenset({7})}

    def test_rejects_foreign_text(self):
        with pytest.raises(ValueError, match="line 3"):
            read_model("mdp\n\nconst int N = 3;\n")

    def test_rejects_foreign_variable(self):
        text = LINEAR_GOLDEN.replace("(s_L'=2)", "(x'=2)")
        with pytest.raises(ValueError):
            read_model(text)
