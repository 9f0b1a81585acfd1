"""Build a small event-based model by hand and check it.

Run with ``python demos/model_check.py``.
"""

from pepcheck import analyze, emit_properties
from pepcheck.model import Timeline
from pepcheck.pipeline import build_mdp, compile_model
from pepcheck.synthetic import DiagramBuilder, event_model, stuck_catcher_model


def order_and_build():
    office = DiagramBuilder("Office", role="Buyer")
    office.chain(office.start(), office.task("Place order", days=1, wd=1),
                 office.throw("order"), office.catch("delivered"),
                 office.task("Pay invoice", days=2, wd=1), office.end())

    shop = DiagramBuilder("Shop", role="Supplier")
    s, gw = shop.start(), shop.xor("in stock?")
    build = shop.task("Build part", days=10, wd=20)
    ship = shop.task("Ship", days=3, wd=1)
    shop.chain(s, shop.catch("order"), gw)
    shop.flow(gw, ship, 0.6, "yes")
    shop.flow(gw, build, 0.4, "no")
    shop.chain(build, ship, shop.throw("delivered"), shop.end())
    return event_model(office.build(), shop.build(), timeline=Timeline((("Pay invoice", 20),)))


if __name__ == "__main__":
    model = order_and_build()
    compiled = compile_model(model)
    print(compiled.emit())
    print(emit_properties(model))
    result = analyze(build_mdp(model))
    print("deadlock free:", result.deadlock_free)
    for key, value in result.values.items():
        print(f"{key}: {value:g}")

    stuck = analyze(build_mdp(stuck_catcher_model()))
    print("\nstuck catcher deadlock free:", stuck.deadlock_free, "Pmin:", stuck.values["Pmin_done"])
