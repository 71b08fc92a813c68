import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (title, outcome, detail); filled by tests marked "criterion"
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion gate")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, "PASS", []])
    if rep.when == "call" or rep.failed:
        if rep.failed:
            entry[1] = "FAIL"
        elif rep.skipped and entry[1] != "FAIL":
            entry[1] = "SKIP"
        if rep.when == "call":
            entry[2].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, details = _CRITERIA[n]
        extra = f"  [{'; '.join(details)}]" if details else ""
        tr.write_line(f"criterion {n}: {status}  {title}{extra}")


@pytest.fixture
def detail(record_property):
    """Attach a one-line measurement to the acceptance summary."""
    def add(text: str):
        record_property("detail", text)
    return add
