import re

import pytest

from pinnresample.pde import problems, reference

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_ac(\d+)_", report.nodeid)
    if not match:
        return
    key = int(match.group(1))
    if report.when != "call" and report.outcome == "passed":
        return
    if hasattr(report, "wasxfail"):
        # known shortfall: the criterion is not met, but the suite stays green
        verdict = f"FAIL (expected: {report.wasxfail})"
    elif report.outcome == "failed":
        verdict = "FAIL"
    else:
        verdict = "SKIP" if report.outcome == "skipped" else "PASS"
    if not _ACCEPTANCE.get(key, "").startswith("FAIL"):
        _ACCEPTANCE[key] = verdict


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"AC{key}: {_ACCEPTANCE[key]}")


@pytest.fixture(scope="session")
def ground_truth_dir(tmp_path_factory):
    """Reference grids for the gridded problems, generated once per session."""
    d = tmp_path_factory.mktemp("ground_truth")
    reference.generate_ground_truth(problems.Burgers(), d)
    return d


@pytest.fixture
def data_env(ground_truth_dir, monkeypatch):
    monkeypatch.setenv(reference.DATA_DIR_ENV, str(ground_truth_dir))
    return ground_truth_dir
