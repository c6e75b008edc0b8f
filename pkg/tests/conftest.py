import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rydlink.atomic.scheme import DipoleLink, Level, LevelScheme, TWO_PI

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GAMMA = TWO_PI * 6.07e6


@pytest.fixture
def two_level():
    return LevelScheme((Level("g"), Level("e", decay=GAMMA)), (DipoleLink(("g", "e"), 2.5e-29),))


@pytest.fixture
def ladder():
    """Plain three-level ladder, no dephasing."""
    levels = (Level("g"), Level("e", decay=GAMMA), Level("r", decay=TWO_PI * 2e3))
    links = (DipoleLink(("g", "e"), 2.5e-29), DipoleLink(("e", "r"), 1e-31))
    return LevelScheme(levels, links)


def assert_physical(rho, tol=1e-10):
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -tol


# criterion number -> [(passed, detail)]; printed once at the end of the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict} | " + "; ".join(msg for _, msg in parts))
