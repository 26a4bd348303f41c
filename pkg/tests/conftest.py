import math
import os

import pytest

from skidsim import BacksteppingGains, DflGains, atrv2
from skidsim.simulator import InitialState, NoiseSpec
from skidsim.trajectories import Circle, paper_lissajous

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def config_path(name: str) -> str:
    return os.path.abspath(os.path.join(CONFIG_DIR, name))


@pytest.fixture(scope="session")
def params():
    return atrv2()


@pytest.fixture(scope="session")
def bs_gains():
    # published tuning for the 5 m circle at 1 m/s
    return BacksteppingGains(3.0, 15.8, 7.95, 1.0, 0.0005, 5.0, 4.05)


@pytest.fixture(scope="session")
def dfl_gains():
    return DflGains(kp1=325.0, kv1=131.0, ka1=20.0, kp2=580.0, kv2=210.0, ka2=67.0)


@pytest.fixture(scope="session")
def circle_tune_trajectory():
    return Circle(5.0, 0.2, center=(3.0, 5.8), phase=0.0)


@pytest.fixture(scope="session")
def experiment_initial():
    return InitialState(8.0, 5.0, math.pi / 2, 0.5, 0.5, 0.1)


@pytest.fixture(scope="session")
def lissajous_initial():
    theta0 = math.atan2(1.0, 2.0)
    return InitialState(5.0 - 0.18 * math.cos(theta0), 5.0 - 0.18 * math.sin(theta0),
                        theta0, math.sqrt(12.5), 0.0, 0.0)


@pytest.fixture(scope="session")
def sensor_noise():
    return NoiseSpec(std=(0.02, 0.02, 0.01, 0.08, 0.08, 0.01))


@pytest.fixture(scope="session")
def lissajous():
    return paper_lissajous()
