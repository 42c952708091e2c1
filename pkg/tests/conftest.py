import pytest

from veridoc.synth import build_corpus

from . import acceptance_log


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Five templates, the reference dataset and the four fixture samples."""
    return build_corpus(tmp_path_factory.mktemp("corpus"))


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.summary_lines():
        terminalreporter.write_line(line)
