import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_direction(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        key = name.split("[")[0]
        prev = _ACCEPTANCE.get(key, "PASS")
        _ACCEPTANCE[key] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        parts = key.split("_")
        terminalreporter.write_line(f"criterion {int(parts[2]):2d} {_ACCEPTANCE[key]}  {' '.join(parts[3:])}")
