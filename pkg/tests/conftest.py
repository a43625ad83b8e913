import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from dqw.starspec import (make_constant_theta_star, make_linear_poisson_2d_star,
                          make_zero_star)
from dqw.taubuild import ClosedFormTau, build_tau

SCENARIO_DIR = pathlib.Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def moyal_r2():
    return make_constant_theta_star([[0, 1], [-1, 0]], K=4)


@pytest.fixture(scope="session")
def moyal_r2_k6():
    return make_constant_theta_star([[0, 1], [-1, 0]], K=6)


@pytest.fixture(scope="session")
def moyal_r3_rank2():
    return make_constant_theta_star([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], K=4)


@pytest.fixture(scope="session")
def zero_star():
    return make_zero_star(2, 3)


@pytest.fixture(scope="session")
def linear_2d():
    return make_linear_poisson_2d_star(K=3)


@pytest.fixture(scope="session")
def tau_moyal_r2(moyal_r2):
    tau, report = build_tau(moyal_r2, 4)
    return tau


@pytest.fixture(scope="session")
def tau_moyal_r3(moyal_r3_rank2):
    tau, report = build_tau(moyal_r3_rank2, 4)
    return tau


@pytest.fixture(scope="session")
def tau_linear(linear_2d):
    tau, report = build_tau(linear_2d, 3)
    return tau


@pytest.fixture(scope="session")
def fixture_tau_r2():
    return ClosedFormTau([[0, 1], [-1, 0]])
