import pytest

from cxp.pathlet import GuaranteeMode, Pathlet


def make_pathlet(pid, ingress, egress, delay=10.0, capacity=100.0, *, owner=64500,
                 mode=GuaranteeMode.BEST_EFFORT, group=None):
    return Pathlet(
        id=pid, owner=owner, ingress=ingress, egress=egress, mode=mode,
        advertised_delay_ms=float(delay), capacity_mbps=float(capacity),
        disjointness_group=group,
    )


@pytest.fixture
def pl():
    return make_pathlet


_VERDICTS = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _VERDICTS.append(f"{status} {marker.args[0]}")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
