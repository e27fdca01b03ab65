import json
from pathlib import Path

import pytest

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def reference():
    return json.loads((GOLDEN / "reference.json").read_text())


@pytest.fixture(scope="session")
def oracle_golden():
    from cmlimit.oracle import read_golden

    return read_golden(GOLDEN / "oracle.json")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
