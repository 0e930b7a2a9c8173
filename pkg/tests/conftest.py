import sys

import pytest

from collatzkit import canonical_program


@pytest.fixture(scope="session")
def p1():
    return canonical_program("p1")


@pytest.fixture(scope="session")
def p1m():
    return canonical_program("p1m")


@pytest.fixture(scope="session")
def p2():
    return canonical_program("p2")


@pytest.fixture(scope="session")
def p4_53():
    return canonical_program("p4", [53])


def canonical_programs():
    """One instance of every canonical family, used by the sweeps."""
    return [
        canonical_program("p1"),
        canonical_program("p1m"),
        canonical_program("p2"),
        canonical_program("p4", [53]),
        canonical_program("p4", [15]),
        canonical_program("p6", [7]),
        canonical_program("p9", [11, "+-"]),
        canonical_program("p9", [13, "-+"]),
    ]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
