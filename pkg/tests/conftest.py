import pytest

CRITERIA = {
    1: "basis orthonormality and derivatives",
    2: "U-identity suite",
    3: "norm growth",
    4: "moment unbiasedness",
    5: "solver",
    6: "oracle conjugacy and hull",
    7: "end-to-end consistency",
    8: "determinism",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(marker.args[0], []).append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        failed = [name for name, ok in results if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {n} ({CRITERIA.get(n, '?')}): {status} [{len(results) - len(failed)}/{len(results)}]"
        if failed:
            line += " failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
