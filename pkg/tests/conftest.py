import pytest

from bns_refined.market_data import load_csv
from oracles import ACCEPTANCE_LINES, FIXTURE, criterion_line


@pytest.fixture(scope="session")
def wti():
    return load_csv(FIXTURE)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        parts = ACCEPTANCE_LINES[n]
        ok = all(p for p, _ in parts)
        terminalreporter.write_line(criterion_line(n, ok, "; ".join(d for _, d in parts)))
