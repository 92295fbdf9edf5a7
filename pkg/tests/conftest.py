import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crnc.cases import ACCEPTANCE_DELTA
from crnc.constructions import GateParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def params():
    return GateParams(ACCEPTANCE_DELTA, 1.0)


@pytest.fixture
def ones():
    return {"X1": 1.0, "X1_bar": 0.0, "X2": 1.0, "X2_bar": 0.0}


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# acceptance criteria report: one line per criterion, printed after the run
_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
