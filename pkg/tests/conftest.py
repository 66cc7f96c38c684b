import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qengine.model import EngineParams  # noqa: E402

ACCEPTANCE_LINES = []


def thermal_bias(**kw):
    base = dict(omega_c=1.0, omega_h=1.0, g=0.1, kappa_c=0.05, kappa_h=0.05, kT_c=0.5, kT_h=5.0)
    base.update(kw)
    return EngineParams(**base)


@pytest.fixture
def fig3_params():
    return thermal_bias()


@pytest.fixture
def fig4_params():
    return thermal_bias(omega_h=2.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
