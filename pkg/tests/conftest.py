import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from symparse.pipeline import resolve_subject  # noqa: E402


@pytest.fixture(scope="session")
def subject():
    cache = {}

    def get(name):
        if name not in cache:
            m = resolve_subject(name)
            cache[name] = (m, m.load_program())
        return cache[name]
    return get


@pytest.fixture(scope="session")
def mined():
    """Session cache of default mining results per bundled subject."""
    from symparse.pipeline import mine
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = mine(resolve_subject(name))
        return cache[name]
    return get


CRITERIA = {}
PROPERTY_OUTCOMES = {}


def pytest_collection_modifyitems(items):
    # acceptance last, so criterion 9 can see the property-suite outcomes
    items.sort(key=lambda it: it.module.__name__ == "test_acceptance")


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion."""
    def record(n, text):
        CRITERIA[n] = [text, False]
        return CRITERIA[n]
    yield record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if item.module.__name__ == "test_properties" and (rep.when == "call" or rep.failed):
        PROPERTY_OUTCOMES[item.nodeid] = rep.passed
    n = getattr(item.function, "criterion", None)
    if n is not None and rep.when == "call" and n in CRITERIA:
        CRITERIA[n][1] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        text, ok = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
