import contextlib

import pytest

CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion's outcome for the end-of-run summary."""

    @contextlib.contextmanager
    def record(key, title):
        try:
            yield
        except BaseException as exc:
            CRITERIA[key] = ("FAIL", f"{title}: {exc}".splitlines()[0])
            raise
        CRITERIA[key] = ("PASS", title)

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: int(k.removeprefix("AC"))):
        status, text = CRITERIA[key]
        terminalreporter.write_line(f"[{status}] {key} {text}")
