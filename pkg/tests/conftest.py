import os
import time
from contextlib import contextmanager

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE: list[str] = []


class _Record:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line for an acceptance criterion."""

    @contextmanager
    def _run(label: str, budget_s: float | None = None):
        rec = _Record()
        t0 = time.perf_counter()
        try:
            yield rec
            elapsed = time.perf_counter() - t0
            if budget_s is not None:
                assert elapsed < budget_s, f"runtime {elapsed:.2f}s exceeds {budget_s}s"
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            _ACCEPTANCE.append(f"FAIL  criterion {label}: {rec.detail} | {msg}")
            raise
        _ACCEPTANCE.append(f"PASS  criterion {label}: {rec.detail} "
                           f"({time.perf_counter() - t0:.2f}s)")

    return _run


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=_criterion_key):
            terminalreporter.write_line(line)


def _criterion_key(line: str):
    label = line.split("criterion ", 1)[1].split(":", 1)[0]
    num, _, sub = label.partition("(")
    return int(num), sub
