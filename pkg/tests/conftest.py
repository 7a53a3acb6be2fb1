import contextlib
import time

import pytest

_VERDICTS = []


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def run(number, title, limit_s=None):
        notes = []
        start = time.perf_counter()
        try:
            yield notes
            elapsed = time.perf_counter() - start
            if limit_s is not None:
                assert elapsed < limit_s, f"took {elapsed:.1f}s, budget {limit_s}s"
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            reason = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            _record(f"FAIL criterion {number}: {title} [{elapsed:.1f}s] {'; '.join(notes)} :: {reason}")
            raise
        _record(f"PASS criterion {number}: {title} [{elapsed:.1f}s] {'; '.join(notes)}")

    return run


def _record(line):
    _VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
