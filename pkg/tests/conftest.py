import pytest

REPORT_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Append one verdict line per acceptance criterion; echoed in the terminal summary."""
    lines = request.config.stash.setdefault(REPORT_KEY, [])

    def add(number, name, passed, detail):
        line = f"CRITERION {number} {name}: {'PASS' if passed else 'FAIL'} ({detail})"
        lines.append(line)
        print(line, flush=True)
        return passed

    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
