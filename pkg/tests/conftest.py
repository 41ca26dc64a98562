import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "opsys", deadline=None, max_examples=20, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("opsys")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


TIME_LIMIT = 300.0
_criteria_lines = []


class Criterion:
    """Times one acceptance criterion and records a PASS/FAIL line for it."""

    def __init__(self, title):
        self.title = title
        self.details = {}

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        ok = exc_type is None and elapsed <= TIME_LIMIT
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        line = f"{'PASS' if ok else 'FAIL'} {self.title} ({detail}) [{elapsed:.1f}s]"
        _criteria_lines.append(line)
        print(line)
        if exc_type is None and not ok:
            raise AssertionError(f"criterion took {elapsed:.1f}s, limit {TIME_LIMIT:.0f}s")
        return False


def _fmt(v):
    return f"{v:.3g}" if isinstance(v, float) else str(v)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _criteria_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criteria_lines:
            terminalreporter.write_line(line)
