import pytest

from rmdl import build_mangoldt_table, goldbach_coefficients


@pytest.fixture(scope="session")
def t1e4():
    return build_mangoldt_table(10**4)


@pytest.fixture(scope="session")
def t1e5():
    return build_mangoldt_table(10**5)


@pytest.fixture(scope="session")
def t1e6():
    return build_mangoldt_table(10**6)


@pytest.fixture(scope="session")
def c2_1e6(t1e6):
    return goldbach_coefficients(t1e6, 2, 10**6, "fft")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
