"""Mechanical-mode and coupling figures of merit from drum geometry.

A tensioned circular drum of radius R, thickness t and stress sigma carries
membrane modes u(r, phi) = J_n(alpha_nm r / R) cos(n phi) at cyclic frequency
Omega_m = (alpha_nm / R) sqrt(sigma/rho) / 2pi.  From the fundamental mode
follow the effective mass, zero-point fluctuation, the capacitive coupling
g0 = (omega_c / 2d) xi_cap xi_par x_zpf of a vacuum-gap capacitor, and the
dissipation-dilution enhancement of the quality factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.special import jn, jn_zeros

from .core import TWO_PI, bose_occupation_linear
from .errors import (
    InvalidModeIndex,
    MissingParticipation,
    NonPositiveRate,
    QuadratureNonConvergence,
)


@dataclass(frozen=True)
class DrumGeometry:
    """Geometry and material constants of the vacuum-gap drum capacitor.

    Lengths in metres, stress/modulus in pascal, density in kg/m^3.
    xi_par (capacitor participation ratio) and the dilution factors
    dilution_a/dilution_b come from external electromagnetic/elastic
    simulation and are plain inputs here.
    """

    radius: float                 # R, drumhead radius
    bottom_radius: float          # R_b, bottom-plate radius
    thickness: float              # t, film thickness
    gap: float                    # d, vacuum gap
    density: float                # rho
    stress: float                 # sigma_m, tensile
    youngs_modulus: float = 0.0   # Y, only needed for dilution
    xi_par: float | None = None   # capacitive participation ratio
    q0: float = 0.0               # bulk material quality factor
    dilution_a: float = 2.0       # A in D_Q = 1/(A lam + B lam^2)
    dilution_b: float = 0.0       # B, negligible at lam ~ 5e-3

    def __post_init__(self):
        if not (self.radius > self.bottom_radius > 0.0):
            raise NonPositiveRate("need R > R_b > 0")
        if self.thickness <= 0.0 or self.gap <= 0.0:
            raise NonPositiveRate("thickness and gap must be > 0")
        if self.density <= 0.0 or self.stress <= 0.0:
            raise NonPositiveRate("density and stress must be > 0")
        if self.xi_par is not None and not (0.0 < self.xi_par <= 1.0):
            raise NonPositiveRate("xi_par must be in (0, 1]")


@dataclass(frozen=True)
class ModeResult:
    """Figures of merit of one drum mode (all cyclic rates in Hz)."""

    omega_m: float        # mechanical frequency [Hz]
    m_eff: float          # effective mass [kg]
    m_phys: float         # physical mass [kg]
    xi_mass: float        # m_eff / m_phys
    x_zpf: float          # zero-point fluctuation [m]
    xi_cap: float         # capacitive mode-shape factor
    g0: float             # single-photon coupling [Hz]
    lam: float            # dilution parameter lambda
    d_q: float            # dissipation dilution factor
    q_m: float            # mechanical quality factor


def bessel_root(n: int, m: int) -> float:
    """m-th positive root of J_n (m >= 1), accurate to machine precision."""
    if m < 1 or n < 0:
        raise InvalidModeIndex(f"need m >= 1 and n >= 0, got (n={n}, m={m})")
    return float(jn_zeros(n, m)[m - 1])


def drum_mode(geom: DrumGeometry, n: int = 0, m: int = 1):
    """Mode frequency and radial shape of drum mode (n, m).

    Returns
    -------
    omega_m : float
        Cyclic mode frequency [Hz]: (alpha_nm / R) sqrt(sigma/rho) / 2pi.
    mode_shape : callable
        u(r[, phi]) = J_n(alpha_nm r / R) cos(n phi); u(0) = 1 for n = 0.
    """
    alpha = bessel_root(n, m)
    omega_m = alpha / geom.radius * math.sqrt(geom.stress / geom.density) / TWO_PI

    def mode_shape(r, phi=0.0):
        radial = jn(n, alpha * np.asarray(r) / geom.radius)
        return radial * np.cos(n * phi)

    return omega_m, mode_shape


def _radial_quadrature(func, upper: float, rtol: float = 1e-12,
                       max_doublings: int = 16) -> float:
    """integral_0^upper func(r) dr by Gauss-Legendre with node doubling.

    Raises QuadratureNonConvergence when the relative change between
    refinements stays above 1e-10 at the refinement cap.
    """
    previous = None
    npts = 32
    for _ in range(max_doublings):
        x, w = np.polynomial.legendre.leggauss(npts)
        r = 0.5 * upper * (x + 1.0)
        value = 0.5 * upper * float(np.sum(w * func(r)))
        if previous is not None:
            scale = max(abs(value), abs(previous), 1e-300)
            if abs(value - previous) <= max(rtol, 1e-10) * scale:
                return value
        previous = value
        npts *= 2
    raise QuadratureNonConvergence(
        f"radial quadrature not converged after {max_doublings} doublings")


def effective_mass_xzpf(geom: DrumGeometry, omega_m: float | None = None,
                        mode_shape=None):
    """Effective mass, physical mass, mass ratio and x_zpf of the fundamental.

    xi_mass = (2/R^2) integral_0^R r |u(r)|^2 dr evaluated by quadrature;
    m_phys = rho pi R^2 t; x_zpf = sqrt(hbar / (2 m_eff * 2pi Omega_m)).

    omega_m/mode_shape may be passed to reuse a drum_mode evaluation (or to
    probe a test shape); defaults are the (0, 1) fundamental.
    """
    if omega_m is None or mode_shape is None:
        omega_m, mode_shape = drum_mode(geom, 0, 1)
    R = geom.radius
    integral = _radial_quadrature(
        lambda r: r * np.abs(mode_shape(r)) ** 2, R)
    xi_mass = 2.0 / R**2 * integral
    m_phys = geom.density * math.pi * R**2 * geom.thickness
    m_eff = xi_mass * m_phys
    x_zpf = math.sqrt(HBAR / (2.0 * m_eff * TWO_PI * omega_m))
    return m_eff, m_phys, xi_mass, x_zpf


def g0_theory(geom: DrumGeometry, omega_c: float):
    """Single-photon coupling of the fundamental mode from geometry.

    g0 = (omega_c / 2d) xi_cap xi_par x_zpf with
    xi_cap = (2/R_b^2) integral_0^{R_b} r u(r) dr.  A closed form
    g0 = 0.37 sqrt(hbar) (omega_c / 2d) (R^2 t^2 rho sigma)^(-1/4)
    is evaluated alongside as a cross-check (agreement within ~2%).

    Returns (g0 [Hz], xi_cap, g0_closed_form [Hz]).
    """
    if geom.xi_par is None:
        raise MissingParticipation(
            "xi_par (capacitor participation ratio) must be supplied")
    omega_m, mode_shape = drum_mode(geom, 0, 1)
    _, _, _, x_zpf = effective_mass_xzpf(geom, omega_m, mode_shape)
    Rb = geom.bottom_radius
    integral = _radial_quadrature(lambda r: r * mode_shape(r), Rb)
    xi_cap = 2.0 / Rb**2 * integral
    g0 = omega_c / (2.0 * geom.gap) * xi_cap * geom.xi_par * x_zpf
    g0_closed = (0.37 * math.sqrt(HBAR) * omega_c / (2.0 * geom.gap)
                 * (geom.radius**2 * geom.thickness**2
                    * geom.density * geom.stress) ** -0.25)
    return g0, xi_cap, g0_closed


def dilution_factor(geom: DrumGeometry):
    """Dissipation dilution: lambda, D_Q = 1/(A lam + B lam^2), Q_m = Q_0 D_Q.

    lambda = (t / 2R) sqrt(Y / 12 sigma).  At lambda -> 0 the bending loss
    vanishes and D_Q diverges; an inf sentinel is returned with a warning.
    """
    if geom.youngs_modulus <= 0.0:
        raise NonPositiveRate("youngs_modulus must be > 0 for dilution")
    lam = (geom.thickness / (2.0 * geom.radius)
           * math.sqrt(geom.youngs_modulus / (12.0 * geom.stress)))
    denom = geom.dilution_a * lam + geom.dilution_b * lam**2
    if denom == 0.0:
        warnings.warn("lambda = 0: dilution factor diverges (lossless "
                      "bending limit)", RuntimeWarning, stacklevel=2)
        d_q = math.inf
    else:
        d_q = 1.0 / denom
    q_m = geom.q0 * d_q
    return lam, d_q, q_m


def mode_figures(geom: DrumGeometry, omega_c: float) -> ModeResult:
    """All fundamental-mode figures of merit in one record."""
    omega_m, mode_shape = drum_mode(geom, 0, 1)
    m_eff, m_phys, xi_mass, x_zpf = effective_mass_xzpf(geom, omega_m,
                                                        mode_shape)
    g0, xi_cap, _ = g0_theory(geom, omega_c)
    lam, d_q, q_m = dilution_factor(geom)
    return ModeResult(omega_m=omega_m, m_eff=m_eff, m_phys=m_phys,
                      xi_mass=xi_mass, x_zpf=x_zpf, xi_cap=xi_cap, g0=g0,
                      lam=lam, d_q=d_q, q_m=q_m)


@dataclass(frozen=True)
class SweepRow:
    """One point of a geometry scaling sweep."""

    axis: str
    factor: float
    result: ModeResult
    gamma_m: float           # Omega_m / Q_m [Hz]
    gamma_th: float          # thermal decoherence at the reference T [Hz]
    c0: float                # single-photon cooperativity 4 g0^2/(kappa Gamma_m)


#: expected power-law exponents of each figure vs each geometry axis
#: (quantity, axis) -> exponent; zero entries omitted
SCALING_EXPONENTS = {
    ("omega_m", "radius"): -1.0, ("omega_m", "stress"): 0.5,
    ("g0", "radius"): -0.5, ("g0", "stress"): -0.25,
    ("g0", "thickness"): -0.5, ("g0", "gap"): -1.0,
    ("gamma_m", "radius"): -2.0, ("gamma_m", "thickness"): 1.0,
    ("q_m", "radius"): 1.0, ("q_m", "stress"): 0.5,
    ("q_m", "thickness"): -1.0,
    ("inv_gamma_th", "radius"): 1.0, ("inv_gamma_th", "stress"): 0.5,
    ("inv_gamma_th", "thickness"): -1.0,
    ("c0", "radius"): 1.0, ("c0", "stress"): -0.5,
    ("c0", "thickness"): -2.0, ("c0", "gap"): -2.0,
    ("x_zpf", "radius"): -0.5, ("x_zpf", "stress"): -0.25,
    ("x_zpf", "thickness"): -0.5,
    ("m_eff", "radius"): 2.0, ("m_eff", "thickness"): 1.0,
}

_AXIS_FIELD = {"R": "radius", "sigma_m": "stress", "t": "thickness",
               "d": "gap", "radius": "radius", "stress": "stress",
               "thickness": "thickness", "gap": "gap"}


def scaling_sweep(base: DrumGeometry, axis: str, factors, *, omega_c: float,
                  kappa: float, temperature: float = 0.011) -> list[SweepRow]:
    """Recompute all figures while scaling one geometry axis.

    axis is one of R/sigma_m/t/d (or the field names radius/stress/
    thickness/gap).  Scaling the radius is shape preserving: the bottom
    radius follows, keeping xi_cap fixed (the scaling laws hold for
    geometrically similar drums).  Gamma_m is derived as Omega_m/Q_m; the
    thermal decoherence rate uses the *linear* bath occupancy k_B T/h Omega
    so that every column is an exact power law of the sweep factor (the
    exact Bose occupation would bend the log-log slope at the 1e-3 level).
    """
    field = _AXIS_FIELD.get(axis)
    if field is None:
        raise ValueError(f"unknown sweep axis {axis!r}")
    rows = []
    for factor in factors:
        if factor <= 0.0:
            raise NonPositiveRate("sweep factors must be > 0")
        changes = {field: getattr(base, field) * factor}
        if field == "radius":
            changes["bottom_radius"] = base.bottom_radius * factor
        geom = replace(base, **changes)
        res = mode_figures(geom, omega_c)
        gamma_m = res.omega_m / res.q_m
        n_th = bose_occupation_linear(res.omega_m, temperature)
        gamma_th = n_th * gamma_m
        c0 = 4.0 * res.g0**2 / (kappa * gamma_m)
        rows.append(SweepRow(axis=field, factor=float(factor), result=res,
                             gamma_m=gamma_m, gamma_th=gamma_th, c0=c0))
    return rows


def sweep_exponent(rows: list[SweepRow], quantity: str) -> float:
    """Fitted log-log slope of a swept quantity vs the sweep factor."""
    factors = np.array([row.factor for row in rows])
    if quantity == "inv_gamma_th":
        values = np.array([1.0 / row.gamma_th for row in rows])
    elif hasattr(rows[0].result, quantity):
        values = np.array([getattr(row.result, quantity) for row in rows])
    else:
        values = np.array([getattr(row, quantity) for row in rows])
    slope = np.polyfit(np.log(factors), np.log(values), 1)[0]
    return float(slope)
