import contextlib
import time

import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@contextlib.contextmanager
def _record(label: str):
    t0 = time.perf_counter()
    ok = False
    detail = ""
    try:
        yield
        ok = True
    except AssertionError as exc:
        detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    finally:
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - t0:.2f}s){' - ' + detail if detail else ''}"
        _ACCEPTANCE.append((label, ok, line))
        print(line)


@pytest.fixture
def criterion():
    """Context manager recording one pass/fail line for an acceptance criterion."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in _ACCEPTANCE:
        terminalreporter.write_line(line)
