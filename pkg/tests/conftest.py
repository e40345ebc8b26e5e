import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def emit(request):
    """Write one line to the terminal immediately and keep it for the summary."""
    config = request.config
    lines = config.stash.setdefault(_LINES, [])
    tr = config.pluginmanager.get_plugin("terminalreporter")

    def write(msg: str) -> None:
        lines.append(msg)
        if tr is not None:
            tr.write_line("")
            tr.write_line(msg)

    return write


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for msg in lines:
            terminalreporter.write_line(msg)
