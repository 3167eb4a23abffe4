import pytest

from tsdstein.model import TsdParams


@pytest.fixture
def bgd():
    # bilateral gamma with right rate 1 and left rate 2
    return TsdParams(1.0, 0.0, 1.0, 1.0, 0.0, 2.0)


@pytest.fixture
def kobol():
    return TsdParams(1.0, 0.3, 1.0, 2.0, 0.3, 3.0)


@pytest.fixture
def laplace():
    # TSD(1, 0, 1, 1, 0, 1) is the standard Laplace law
    return TsdParams(1.0, 0.0, 1.0, 1.0, 0.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
