import time
from contextlib import contextmanager

import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Context manager that times a criterion and records one PASS/FAIL line."""
    lines = request.config._acceptance_lines

    @contextmanager
    def run(number, title, limit_s):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            dt = time.perf_counter() - t0
            lines.append((number, f"FAIL  {title} ({dt:.1f}s): {type(exc).__name__}: {exc}"[:300]))
            raise
        dt = time.perf_counter() - t0
        if dt >= limit_s:
            lines.append((number, f"FAIL  {title} ({dt:.1f}s, limit {limit_s}s)"))
            raise AssertionError(f"criterion {number} took {dt:.1f}s, limit {limit_s}s")
        lines.append((number, f"PASS  {title} ({dt:.1f}s, limit {limit_s}s)"))

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, text in sorted(lines):
        terminalreporter.write_line(f"[{number:>2}] {text}")
