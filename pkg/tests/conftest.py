import pytest

TOY_SUM = """def priority():
    return tunable([1, 2, 3]) + tunable([1, 2, 3]) + tunable([1, 2, 3])
"""

_criteria: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in getattr(report, "criterion_marks", ()):
        _criteria.setdefault(mark, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criterion_marks = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcomes = _criteria[n]
        if all(o == "skipped" for o in outcomes):
            status = "SKIP"
        elif all(o in ("passed", "skipped") for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({len(outcomes)} checks)")


@pytest.fixture
def toy_sum_text():
    return TOY_SUM
