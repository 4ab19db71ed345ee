import pytest

from jetcheck import library, parse_file


@pytest.fixture(scope="session")
def exx1():
    return parse_file(library.path("exx1.jet"))


@pytest.fixture(scope="session")
def exx2():
    return parse_file(library.path("exx2.jet"))


@pytest.fixture(scope="session")
def static_file():
    return parse_file(library.path("static.jet"))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
