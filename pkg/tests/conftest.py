import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ecdt.types import EventStream

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Mark a test as the check for one acceptance criterion; outcome is reported at session end."""
    def mark(name):
        _CRITERIA.setdefault(name, []).append(request.node.nodeid)
    return mark


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    outcome = {}
    for key in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") == "call" or key in ("error", "skipped") or rep.failed:
                prev = outcome.get(rep.nodeid)
                if prev in ("failed", "error"):
                    continue
                outcome[rep.nodeid] = key
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0][2:])):
        results = [outcome.get(nid, "failed") for nid in _CRITERIA[name]]
        if any(r in ("failed", "error") for r in results):
            status = "FAIL"
        elif all(r == "skipped" for r in results):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"{status}  {name}")


def random_stream(rng, n, width=40, height=40, duration=0.01, on_fraction=0.5):
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    t = np.sort(rng.uniform(0, duration, n))
    p = (rng.random(n) < on_fraction).astype(np.int8)
    return EventStream(x, y, t, p, width, height)
