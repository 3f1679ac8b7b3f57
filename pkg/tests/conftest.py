import pytest

_LINES = []


@pytest.fixture
def record():
    """Append a verdict line shown in the terminal summary."""
    def add(key, ok, detail):
        _LINES.append((key, "PASS" if ok else "FAIL", detail))
        return ok
    return add


def _order(key):
    num = "".join(c for c in key if c.isdigit())
    return int(num or 0), key


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key, verdict, detail in sorted(_LINES, key=lambda x: _order(x[0])):
        terminalreporter.write_line(f"criterion {key:<4} {verdict}  {detail}")
