import re

import pytest

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.when == "call" or report.failed:
        names, ok = _ACCEPTANCE.get(num, (set(), True))
        names.add(m.group(2))
        _ACCEPTANCE[num] = (names, ok and not report.failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, (names, ok) in sorted(_ACCEPTANCE.items()):
        label = ", ".join(sorted(names)).replace("_", " ")
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  ({label})")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
