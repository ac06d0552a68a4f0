import numpy as np
import pytest

from cryodrum import core


@pytest.fixture
def params():
    """Reference-device constants used across the suite."""
    return core.validate_params(dict(
        omega_c=5.5e9, kappa=250e3, kappa_ex=200e3, kappa_0=50e3,
        omega_m=1.8e6, gamma_m=0.045, g0=13.4))


@pytest.fixture
def baths():
    return core.BathOccupations(n_c_th=0.25, n_m_th=255.0, n_c=0.05)


@pytest.fixture
def pump_only(params):
    tone = core.drive_tone("cooling_pump", gamma_m=params.gamma_m,
                           cooperativity=2000.0, delta=25e3)
    return core.DriveSet(tones=(tone,), gamma_m=params.gamma_m)


@pytest.fixture
def three_tone(params):
    tones = (
        core.drive_tone("cooling_pump", gamma_m=params.gamma_m,
                        cooperativity=2000.0, delta=25e3),
        core.drive_tone("red_probe", gamma_m=params.gamma_m,
                        gamma_opt=12.9, delta=0.0),
        core.drive_tone("blue_probe", gamma_m=params.gamma_m,
                        gamma_opt=12.9, delta=10e3),
    )
    return core.DriveSet(tones=tones, gamma_m=params.gamma_m)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
