import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20170401)


ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a one-line pass/fail verdict for an acceptance criterion."""
    label = request.node.get_closest_marker("criterion").args[0]
    yield
    ACCEPTANCE.append((label, request.node))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.stash_outcome = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, node in ACCEPTANCE:
        verdict = getattr(node, "stash_outcome", "failed").upper()
        terminalreporter.write_line(f"{verdict:7s} {label}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion label")
