import pytest

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call ``criterion(number, title, checks, detail)``; ``checks`` maps a label
    to a bool.  A test that errors before recording is reported as FAIL.
    """
    state = {}

    def record(number, title, checks, detail=""):
        ok = all(bool(v) for v in checks.values())
        failed = [k for k, v in checks.items() if not v]
        tail = f" [failed: {', '.join(failed)}]" if failed else ""
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} -- {detail}{tail}"
        state["number"] = number
        request.config.stash[ACCEPTANCE_LINES].append(line)
        print(line)
        assert ok, line

    yield record
    if "number" not in state:
        number = request.node.get_closest_marker("criterion").args[0]
        request.config.stash[ACCEPTANCE_LINES].append(
            f"FAIL criterion {number}: {request.node.name} -- raised before reporting")
