import numpy as np
import pytest

from govdisc.govmodel import load_fixture
from govdisc.synth import Constant, ProcessPlan, WithRipple, generate_ground_truth


@pytest.fixture(scope="session")
def tool135():
    return load_fixture("135")


@pytest.fixture(scope="session")
def build135():
    return load_fixture("build")


@pytest.fixture(scope="session")
def small_synth(tool135, build135):
    """Four noiseless layers, constant torque."""
    return generate_ground_truth(tool135, build135, ProcessPlan(layers=4, torque_profile=Constant(60.0)))


@pytest.fixture(scope="session")
def ripple_synth(tool135, build135):
    """Sixteen noiseless layers, 60 N*m with 10% ripple."""
    plan = ProcessPlan(layers=16, torque_profile=WithRipple(Constant(60.0), 0.1, 20.0))
    return generate_ground_truth(tool135, build135, plan)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[key]:
            terminalreporter.write_line(line)
