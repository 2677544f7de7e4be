import pytest


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture(autouse=True, scope="session")
def _acceptance_sink(request):
    import test_acceptance

    test_acceptance.SINK = request.config.acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("AC", 1)[1].split()[0])):
            terminalreporter.write_line(line)
