import os
from collections import defaultdict

import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_outcomes: dict[str, list] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")
    config.addinivalue_line("markers", "slow: long-running solver test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", str(marker.args[0])))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[props["criterion"]].append((report.nodeid.split("::")[-1], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_outcomes, key=int):
        results = _outcomes[key]
        failed = [name for name, outcome, _ in results if outcome == "failed"]
        skipped = [name for name, outcome, _ in results if outcome == "skipped"]
        status = "FAIL" if failed else ("SKIP" if len(skipped) == len(results) else "PASS")
        line = f"criterion {key}: {status} ({len(results) - len(failed) - len(skipped)}/{len(results)} tests passed)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
        for name, outcome, detail in results:
            if detail:
                tr.write_line(f"    {name}: {detail}")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the criterion summary."""

    def _set(text: str):
        request.node.user_properties.append(("detail", text))

    return _set
