import random
from collections import defaultdict

import pytest

from pepcheck import synthetic
from pepcheck.model import MessageFlow, Pool, ProcessModel
from pepcheck.synthetic import DiagramBuilder

RANDOM_SEEDS = range(240)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion a test belongs to")


_outcomes = defaultdict(list)
_titles = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    _titles[n] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[n].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        if any(r == "failed" for r in results):
            verdict = "FAIL"
        elif all(r == "skipped" for r in results):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"AC{n} {verdict}  {_titles[n]} ({len(results)} checks)")


@pytest.fixture(scope="session")
def random_models():
    return [synthetic.random_pool_model(random.Random(seed)) for seed in RANDOM_SEEDS]


@pytest.fixture
def linear_diagram():
    """start -> t1 -> end"""
    b = DiagramBuilder("A", "Linear", role="Engineer")
    b.chain(b.start(), b.task("t1", days=5, wd=15), b.end())
    return b.build()


@pytest.fixture
def two_pool_model():
    """Two single-pool diagrams and one message flow from t1 (A) to t5 (B)."""
    a = DiagramBuilder("A", role="Sender")
    a.chain(a.start(), a.task("t1"), a.end())
    b = DiagramBuilder("B", role="Receiver")
    b.chain(b.start(), b.task("t4"), b.task("t5"), b.end())
    da, db = a.build(), b.build()
    return ProcessModel(
        diagrams=(da, db),
        pools=(Pool("PA", "Sender pool", ("A",)), Pool("PB", "Receiver pool", ("B",))),
        message_flows=(MessageFlow("M1", a.ref("t1"), b.ref("t5")),),
    )
