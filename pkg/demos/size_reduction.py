"""Compare the eBPMN composition with the merged pool-based baseline.

Run with ``python demos/size_reduction.py``.
"""

from pepcheck import convert_to_event_based, engine
from pepcheck.pipeline import build_baseline_mdp, build_mdp
from pepcheck.synthetic import park_pilot_2level_model, park_pilot_pool_model


def compare(title, model):
    converted, report = convert_to_event_based(model)
    print(f"== {title}")
    print(f"diagrams: {len(model.diagrams)} before conversion, {len(converted.diagrams)} after")
    for removed, kept in report.mappings:
        print(f"  {removed} is a copy of {kept}")
    ours = engine.count_state_space(build_mdp(model))
    base = engine.count_state_space(build_baseline_mdp(model))
    print(f"eBPMN: {ours[0]} states, {ours[1]} transitions")
    print(f"pBPMN: {base[0]} states, {base[1]} transitions")
    print(f"reduction: {1 - ours[0] / base[0]:.1%} in states and {1 - ours[1] / base[1]:.1%} in transitions\n")


if __name__ == "__main__":
    compare("two levels", park_pilot_2level_model())
    compare("three levels with a redundant calibration process", park_pilot_pool_model())
