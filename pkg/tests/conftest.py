import numpy as np
import pytest

from aeblow import damping as damping_mod
from aeblow import metric as metric_mod
from aeblow import wave_solver as solver_mod


@pytest.fixture(scope="session")
def flat3():
    return metric_mod.flat_profile(3)


@pytest.fixture(scope="session")
def flat2():
    return metric_mod.flat_profile(2)


@pytest.fixture(scope="session")
def powerlaw3():
    return metric_mod.power_law_profile(3, 0.5, 1.0)


@pytest.fixture(scope="session")
def powerlaw2():
    return metric_mod.power_law_profile(2, 0.5, 1.0)


@pytest.fixture(scope="session")
def zero_damping():
    return damping_mod.zero_damping()


@pytest.fixture(scope="session")
def scat_damping():
    return damping_mod.scattering_power_damping(1.0, 2.0)


@pytest.fixture(scope="session")
def bump_data():
    return solver_mod.DataProfile(r0=1.0, u0_amp=1.0, u1_amp=1.0)
