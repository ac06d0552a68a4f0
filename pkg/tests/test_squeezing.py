import math

import numpy as np
import pytest

from cryodrum import squeezing
from cryodrum.core import TWO_PI
from cryodrum.errors import (
    TruncationNonConvergence,
    UnphysicalVariances,
    UnstableSqueeze,
)
from cryodrum.tomography import GaussianMechState


# ---- drive targets and limits ----

def test_squeeze_target_vacuum_limit():
    drive = squeezing.squeeze_drive(75.0, 0.0, kappa=250e3)
    r, v_sq, v_asq = squeezing.squeeze_target(drive)
    assert r == 0.0
    assert v_sq == 0.5
    assert v_asq == 0.5


def test_squeeze_target_minus5db():
    gamma_r = 75.0
    gamma_b = gamma_r * 10 ** (-0.5)
    drive = squeezing.squeeze_drive(gamma_r, gamma_b, kappa=250e3)
    assert drive.ratio_db == pytest.approx(-5.0, abs=1e-12)
    r, v_sq, _ = squeezing.squeeze_target(drive)
    assert r == pytest.approx(0.636251, abs=1e-5)
    assert 10.0 * math.log10(2.0 * v_sq) == pytest.approx(-5.527, abs=5e-3)
    expected_g = math.sqrt(250e3 / 4.0) * math.sqrt(gamma_r - gamma_b)
    assert drive.coupling_g == pytest.approx(expected_g, rel=1e-12)


def test_squeeze_stability_guard():
    with pytest.raises(UnstableSqueeze):
        squeezing.squeeze_drive(75.0, 75.0, kappa=250e3)


def test_squeeze_parameter_monotonicity():
    ratios = np.linspace(0.01, 0.99, 37)
    values = [squeezing.squeeze_drive(75.0, 75.0 * x, kappa=250e3).r_target
              for x in ratios]
    assert np.all(np.diff(values) > 0.0)


def test_squeezing_limit_values():
    assert squeezing.squeezing_limit(0.0, 1.0) == 0.0
    assert squeezing.squeezing_limit(255.0, 2561.0) == pytest.approx(-3.50,
                                                                     abs=5e-3)
    # the measured -2.7 dB sits above (shallower than) this bound
    assert squeezing.squeezing_limit(255.0, 2561.0) <= -2.7


def test_squeezed_thermal_inversion():
    n_th, r = squeezing.squeezed_thermal_from_variances(0.27, 3.27)
    assert n_th == pytest.approx(0.4396, abs=1e-4)
    assert r == pytest.approx(0.6236, abs=1e-4)
    assert squeezing.squeezed_thermal_from_variances(0.5, 0.5) \
        == (pytest.approx(0.0, abs=1e-12), pytest.approx(0.0, abs=1e-12))
    with pytest.raises(UnphysicalVariances):
        squeezing.squeezed_thermal_from_variances(0.2, 0.3)
    with pytest.raises(ValueError):
        squeezing.squeezed_thermal_from_variances(3.0, 0.3)


# ---- moment evolution ----

def test_moments_phi_zero_keeps_b2():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=0.0,
                                     initial=initial)
    times = np.linspace(0.0, 5e-3, 11)
    traj = squeezing.moments_evolve(model, times)
    assert np.allclose(np.abs(traj.b2), abs(initial.b2), rtol=1e-14)
    rates = squeezing.decoherence_rates(times, traj.v_sq, traj.v_asq)
    assert rates.gamma_sq == pytest.approx(17.1, rel=1e-9)
    assert rates.gamma_asq == pytest.approx(17.1, rel=1e-9)


def test_moments_isotropic_state_insensitive():
    initial = GaussianMechState.thermal(0.8)
    times = np.linspace(0.0, 5e-3, 11)
    for phi in (0.0, 0.3, 2.0):
        model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=phi,
                                         initial=initial)
        traj = squeezing.moments_evolve(model, times)
        rates = squeezing.decoherence_rates(times, traj.v_sq, traj.v_asq)
        assert rates.delta == pytest.approx(0.0, abs=1e-12)


def test_initial_slope_identity_richardson():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=0.09,
                                     initial=initial)
    expected = squeezing.initial_slope_delta(model)
    assert expected == pytest.approx(0.9781, abs=5e-4)

    def delta_slope(dt):
        times = np.array([0.0, dt])
        traj = squeezing.moments_evolve(model, times)
        slope_sq = (traj.v_sq[1] - traj.v_sq[0]) / dt
        slope_asq = (traj.v_asq[1] - traj.v_asq[0]) / dt
        return (slope_sq - slope_asq) / TWO_PI

    d1 = delta_slope(1e-6)
    d2 = delta_slope(5e-7)
    richardson = 2.0 * d2 - d1
    assert richardson == pytest.approx(expected, rel=1e-6)


def test_mean_slope_equals_gamma_th():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=0.23,
                                     initial=initial)
    times = np.linspace(0.0, 5e-3, 11)
    traj = squeezing.moments_evolve(model, times)
    rates = squeezing.decoherence_rates(times, traj.v_sq, traj.v_asq)
    # dephasing conserves <n>: the mean slope is the injected thermal rate
    assert rates.gamma_th_est == pytest.approx(17.1, rel=1e-6)


def test_finite_temperature_mode_saturates():
    initial = GaussianMechState.vacuum()
    model = squeezing.DephasingModel(gamma_th=20.5, gamma_phi=0.0,
                                     initial=initial,
                                     mode="finite_temperature",
                                     gamma_m=0.08, n_m_th=255.0)
    traj = squeezing.moments_evolve(model, np.array([0.0, 30.0]))
    assert traj.n[-1] == pytest.approx(255.0, rel=1e-3)


# ---- Lindblad oracle ----

def test_lindblad_matches_moments_reference_state():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=0.09,
                                     initial=initial)
    times = np.linspace(0.0, 5e-3, 6)
    mom = squeezing.moments_evolve(model, times)
    lind = squeezing.lindblad_evolve(model, times)
    for a, b in ((lind.n, mom.n), (lind.v_sq, mom.v_sq),
                 (lind.v_asq, mom.v_asq)):
        assert np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)) < 1e-3
    assert lind.trace_dev.max() < 1e-10
    assert lind.min_eigenvalue.min() > -1e-8


def test_lindblad_initial_state_axes():
    # X1 is the squeezed axis of the constructed density matrix
    initial = GaussianMechState.squeezed_thermal(0.2, 0.5)
    model = squeezing.DephasingModel(gamma_th=5.0, gamma_phi=0.0,
                                     initial=initial)
    traj = squeezing.lindblad_evolve(model, np.array([0.0]))
    assert traj.var_x1[0] == pytest.approx(initial.var_x1, rel=1e-6)
    assert traj.var_x2[0] == pytest.approx(initial.var_x2, rel=1e-6)


def test_lindblad_dephasing_invariant_on_isotropic():
    initial = GaussianMechState.thermal(0.5)
    times = np.linspace(0.0, 3e-3, 4)
    base = squeezing.lindblad_evolve(squeezing.DephasingModel(
        gamma_th=10.0, gamma_phi=0.0, initial=initial,
        truncation_dim=48), times)
    dephased = squeezing.lindblad_evolve(squeezing.DephasingModel(
        gamma_th=10.0, gamma_phi=0.7, initial=initial,
        truncation_dim=48), times)
    assert np.allclose(base.v_sq, dephased.v_sq, atol=1e-10)
    assert np.allclose(base.n, dephased.n, atol=1e-10)


def test_lindblad_finite_temperature_equilibrium():
    initial = GaussianMechState.thermal(0.2)
    model = squeezing.DephasingModel(
        gamma_th=6.0, gamma_phi=0.0, initial=initial,
        mode="finite_temperature", gamma_m=2.0, n_m_th=2.0)
    times = np.linspace(0.0, 1.3, 3)   # ~16 relaxation times
    traj = squeezing.lindblad_evolve(model, times)
    assert traj.n[-1] == pytest.approx(2.0, rel=1e-3)


def test_lindblad_truncation_guard():
    initial = GaussianMechState.squeezed_thermal(1.5, 0.9)
    model = squeezing.DephasingModel(gamma_th=30.0, gamma_phi=0.2,
                                     initial=initial, truncation_dim=12)
    with pytest.raises(TruncationNonConvergence):
        squeezing.lindblad_evolve(model, np.linspace(0.0, 2e-3, 3))


# ---- dephasing extraction ----

def test_extract_dephasing_roundtrip():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    times = np.linspace(0.0, 5e-3, 11)
    model = squeezing.DephasingModel(gamma_th=17.1, gamma_phi=0.05,
                                     initial=initial)
    traj = squeezing.moments_evolve(model, times)
    rates = squeezing.decoherence_rates(times, traj.v_sq, traj.v_asq)
    result = squeezing.extract_dephasing(rates, initial, gamma_th=17.1,
                                         times=times)
    assert result.gamma_phi == pytest.approx(0.05, abs=1e-3)


def test_extract_dephasing_zero():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    result = squeezing.extract_dephasing(0.0, initial, gamma_th=17.1)
    assert result.gamma_phi == 0.0


def test_extract_dephasing_reference_rates():
    # measured slope difference 1.1 +/- 0.6 Hz on the (0.4, 0.6) state
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    result = squeezing.extract_dephasing(1.1, initial, gamma_th=17.1,
                                         delta_err=0.6, n_th_err=0.2,
                                         r_err=0.1)
    assert result.gamma_phi == pytest.approx(0.09, abs=0.05)
    assert result.lo < 0.09 < result.hi
    # forward curve attached and monotone
    assert np.all(np.diff(result.curve_delta) >= -1e-12)


def test_extract_dephasing_curve_monotone_guard():
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    with pytest.raises(ValueError):
        squeezing.extract_dephasing(-0.5, initial, gamma_th=17.1)


def test_lindblad_rotated_initial_state():
    # density-matrix construction honors the state's rotation convention
    initial = GaussianMechState.squeezed_thermal(0.2, 0.5).rotated(0.4)
    model = squeezing.DephasingModel(gamma_th=5.0, gamma_phi=0.0,
                                     initial=initial)
    traj = squeezing.lindblad_evolve(model, np.array([0.0]))
    assert traj.var_x1[0] == pytest.approx(initial.var_x1, rel=1e-6)
    assert traj.var_x2[0] == pytest.approx(initial.var_x2, rel=1e-6)
    assert traj.b2[0].real == pytest.approx(initial.b2.real, rel=1e-6)
    assert traj.b2[0].imag == pytest.approx(initial.b2.imag, rel=1e-6)


def test_finite_temperature_matches_tomography_evolution():
    # the readout module's free-evolution law and the squeezing module's
    # finite-temperature moments are the same dynamics
    from cryodrum import tomography as tomo
    initial = GaussianMechState.squeezed_thermal(0.4, 0.6)
    gamma_m, n_m_th, gamma_phi = 0.08, 255.0, 0.09
    times = np.linspace(0.0, 5e-3, 7)
    model = squeezing.DephasingModel(
        gamma_th=(n_m_th + 1.0) * gamma_m, gamma_phi=gamma_phi,
        initial=initial, mode="finite_temperature", gamma_m=gamma_m,
        n_m_th=n_m_th)
    traj = squeezing.moments_evolve(model, times)
    for idx, t in enumerate(times):
        evolved = tomo.evolve_moments_free(initial, float(t), gamma_m,
                                           n_m_th, gamma_phi)
        assert evolved.n == pytest.approx(traj.n[idx], rel=1e-12)
        assert abs(evolved.b2) == pytest.approx(abs(traj.b2[idx]), rel=1e-12)
