import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.constants import hbar
from scipy.special import j0, j1

from cryodrum import device
from cryodrum.errors import (
    InvalidModeIndex,
    MissingParticipation,
    NonPositiveRate,
    QuadratureNonConvergence,
)

GEOM = device.DrumGeometry(
    radius=75e-6, bottom_radius=23e-6, thickness=180e-9, gap=180e-9,
    density=2700.0, stress=350e6, youngs_modulus=75e9, xi_par=0.8, q0=4e5)

OMEGA_C = 5.5e9


def bisect_j0_root(lo=2.0, hi=3.0, steps=80):
    """Independent oracle: plain bisection on J0 between 2 and 3."""
    flo = j0(lo)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        fmid = j0(mid)
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def test_bessel_root_against_bisection():
    assert device.bessel_root(0, 1) == pytest.approx(bisect_j0_root(),
                                                     abs=1e-10)
    assert device.bessel_root(0, 1) == pytest.approx(2.40483, abs=1e-5)


def test_invalid_mode_index():
    with pytest.raises(InvalidModeIndex):
        device.drum_mode(GEOM, 0, 0)
    with pytest.raises(InvalidModeIndex):
        device.bessel_root(-1, 1)


def test_fundamental_frequency():
    omega_m, shape = device.drum_mode(GEOM, 0, 1)
    assert omega_m == pytest.approx(1.8e6, rel=0.03)
    assert shape(0.0) == pytest.approx(1.0, abs=1e-14)
    # frozen from the closed form (alpha/R) sqrt(sigma/rho) / 2pi
    assert omega_m == pytest.approx(1.8373614e6, rel=1e-6)


def test_frequency_stress_scaling():
    omega_1, _ = device.drum_mode(GEOM, 0, 1)
    omega_4, _ = device.drum_mode(replace(GEOM, stress=4.0 * GEOM.stress), 0, 1)
    assert omega_4 == pytest.approx(2.0 * omega_1, rel=1e-14)


def test_xi_mass_analytic_oracle():
    # 2 int_0^1 x J0(a x)^2 dx = J1(a)^2 at a Bessel root
    alpha = device.bessel_root(0, 1)
    _, _, xi_mass, _ = device.effective_mass_xzpf(GEOM)
    assert xi_mass == pytest.approx(j1(alpha) ** 2, rel=1e-10)
    assert xi_mass == pytest.approx(0.27, rel=0.01)


def test_xi_mass_riemann_oracle():
    alpha = device.bessel_root(0, 1)
    r = (np.arange(1_000_000) + 0.5) / 1_000_000 * GEOM.radius
    riemann = 2.0 / GEOM.radius**2 * np.sum(
        r * j0(alpha * r / GEOM.radius) ** 2) * (GEOM.radius / 1_000_000)
    _, _, xi_mass, _ = device.effective_mass_xzpf(GEOM)
    assert xi_mass == pytest.approx(riemann, rel=1e-8)


def test_rigid_piston_mass_ratio():
    omega_m, _ = device.drum_mode(GEOM, 0, 1)
    _, _, xi_mass, _ = device.effective_mass_xzpf(
        GEOM, omega_m, lambda r: np.ones_like(np.asarray(r, dtype=float)))
    assert xi_mass == pytest.approx(1.0, rel=1e-12)


def test_mass_and_zero_point():
    m_eff, m_phys, xi_mass, x_zpf = device.effective_mass_xzpf(GEOM)
    assert m_eff == pytest.approx(2.3e-12, rel=0.03)
    assert x_zpf == pytest.approx(1.4e-15, rel=0.05)
    assert m_eff == pytest.approx(xi_mass * m_phys, rel=1e-14)
    # hbar = 2 m_eff (2 pi Omega) x_zpf^2 identically
    omega_m, _ = device.drum_mode(GEOM, 0, 1)
    assert 2.0 * m_eff * 2.0 * math.pi * omega_m * x_zpf**2 \
        == pytest.approx(hbar, rel=1e-12)


def test_xi_cap_analytic_oracle():
    alpha = device.bessel_root(0, 1)
    beta = GEOM.bottom_radius / GEOM.radius
    expected = 2.0 * j1(alpha * beta) / (alpha * beta)
    g0, xi_cap, _ = device.g0_theory(GEOM, OMEGA_C)
    assert xi_cap == pytest.approx(expected, rel=1e-10)
    assert xi_cap == pytest.approx(0.93, rel=0.01)


def test_g0_theory_value_and_closed_form():
    g0, _, g0_closed = device.g0_theory(GEOM, OMEGA_C)
    assert g0 == pytest.approx(14.0, rel=0.15)
    assert g0_closed == pytest.approx(g0, rel=0.02)


def test_g0_gap_scaling():
    g0, _, _ = device.g0_theory(GEOM, OMEGA_C)
    g0_wide, _, _ = device.g0_theory(replace(GEOM, gap=2.0 * GEOM.gap),
                                     OMEGA_C)
    assert g0_wide == pytest.approx(0.5 * g0, rel=1e-12)


def test_g0_requires_participation():
    with pytest.raises(MissingParticipation):
        device.g0_theory(replace(GEOM, xi_par=None), OMEGA_C)


def test_dilution_factor():
    lam, d_q, q_m = device.dilution_factor(GEOM)
    assert lam == pytest.approx(5.07e-3, rel=0.01)
    assert d_q == pytest.approx(100.0, rel=0.20)
    assert q_m == pytest.approx(GEOM.q0 * d_q, rel=1e-14)
    # reference figures: Q0 = 4e5 at D_Q = 100 gives Q_m = 4e7
    assert 4e5 * 100.0 == pytest.approx(4e7)


def test_dilution_lossless_limit():
    geom = replace(GEOM, dilution_a=0.0, dilution_b=0.0)
    with pytest.warns(RuntimeWarning):
        lam, d_q, q_m = device.dilution_factor(geom)
    assert math.isinf(d_q)


def test_scaling_rows_identity_and_examples(params):
    rows = device.scaling_sweep(GEOM, "t", [1.0, 2.0], omega_c=OMEGA_C,
                                kappa=params.kappa)
    base, doubled = rows
    # factor 1 reproduces the unscaled figures
    ref = device.mode_figures(GEOM, OMEGA_C)
    assert base.result == ref
    # thickness x2 -> single-photon cooperativity x 1/4
    assert doubled.c0 == pytest.approx(base.c0 / 4.0, rel=1e-12)

    rows_r = device.scaling_sweep(GEOM, "R", [1.0, 4.0], omega_c=OMEGA_C,
                                  kappa=params.kappa)
    assert rows_r[1].result.q_m == pytest.approx(4.0 * rows_r[0].result.q_m,
                                                 rel=1e-12)


def test_scaling_exponent_table(params):
    factors = np.geomspace(0.5, 2.0, 7)
    for axis in ("radius", "stress", "thickness", "gap"):
        rows = device.scaling_sweep(GEOM, axis, factors, omega_c=OMEGA_C,
                                    kappa=params.kappa)
        for (quantity, ax), expected in device.SCALING_EXPONENTS.items():
            if ax != axis:
                continue
            fitted = device.sweep_exponent(rows, quantity)
            assert fitted == pytest.approx(expected, abs=1e-6), (quantity, ax)


def test_sweep_guards(params):
    with pytest.raises(NonPositiveRate):
        device.scaling_sweep(GEOM, "t", [0.0], omega_c=OMEGA_C,
                             kappa=params.kappa)
    with pytest.raises(ValueError):
        device.scaling_sweep(GEOM, "unknown", [1.0], omega_c=OMEGA_C,
                             kappa=params.kappa)


def test_quadrature_cap():
    # an effectively random integrand cannot converge in one refinement
    rng = np.random.default_rng(0)

    def noisy(r):
        return rng.standard_normal(np.shape(r))

    with pytest.raises(QuadratureNonConvergence):
        device._radial_quadrature(noisy, 1.0, max_doublings=2)


def test_geometry_validation():
    with pytest.raises(NonPositiveRate):
        device.DrumGeometry(radius=10e-6, bottom_radius=20e-6,
                            thickness=1e-7, gap=1e-7, density=2700.0,
                            stress=1e8)
