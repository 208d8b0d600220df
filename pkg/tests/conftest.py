import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[int, str] = {}


@contextmanager
def _criterion(number: int, budget: float):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        _RESULTS[number] = f"criterion {number}: {status} ({elapsed:.2f}s, budget {budget:g}s)"
        print(_RESULTS[number])


@pytest.fixture
def criterion():
    """Context manager timing one acceptance criterion against its budget."""
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_RESULTS):
            terminalreporter.write_line(_RESULTS[n])
