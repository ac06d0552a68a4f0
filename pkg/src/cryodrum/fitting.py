"""Spectral and regression estimators shared by the inverse pipelines.

A spectrum-analyzer trace of resolution bandwidth RBW is the true PSD
convolved with a Gaussian of sigma = RBW / sqrt(2 pi); a Lorentzian line
therefore appears as a Voigt profile.  Since convolution preserves area, the
sideband power is always the *Lorentzian* area, extracted either by direct
integration (wide, resolved peaks) or by a Voigt fit (linewidth comparable
to the RBW).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import wofz

from .dynamics import Spectrum
from .errors import (
    DegenerateDesign,
    FitNonConvergence,
    IllConditioned,
    PeakUnresolved,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def sigma_from_rbw(rbw: float) -> float:
    """Gaussian blur width of an FFT analyzer: sigma = RBW / sqrt(2 pi)."""
    return rbw / SQRT_2PI


def voigt_eval(omega, gamma: float, sigma_rbw: float):
    """Unit-area Voigt profile via the Faddeeva function.

    gamma is the Lorentzian HWHM; sigma_rbw the Gaussian standard deviation.
    sigma_rbw = 0 returns the exact Lorentzian gamma / (pi (omega^2 +
    gamma^2)); gamma = 0 the pure Gaussian.
    """
    if gamma < 0.0 or sigma_rbw < 0.0:
        raise ValueError("gamma and sigma_rbw must be >= 0")
    x = np.asarray(omega, dtype=float)
    if sigma_rbw == 0.0:
        return gamma / (math.pi * (x**2 + gamma**2))
    z = (x + 1j * gamma) / (sigma_rbw * math.sqrt(2.0))
    return np.real(wofz(z)) / (sigma_rbw * SQRT_2PI)


@dataclass(frozen=True)
class PeakFit:
    """Result of a single-peak fit.

    width is the Lorentzian FWHM; area the Lorentzian area (the physical
    sideband power, invariant under RBW blurring); height the deconvolved
    Lorentzian peak value, tied to the others by area = height * pi * width/2.
    covariance is the 4x4 matrix over (center, width, area, floor).
    """

    center: float
    width: float
    height: float
    area: float
    floor: float
    covariance: np.ndarray
    model: str = "lorentzian"
    sigma_rbw: float = 0.0


def _peak_model(freq, center, fwhm, area, floor, sigma_rbw):
    return floor + area * voigt_eval(freq - center, fwhm / 2.0, sigma_rbw)


def _initial_guess(freq, values, sigma_rbw):
    """Moment-based initialization: edge floor, extremum sign/center, and a
    half-max width with the RBW share removed."""
    k = max(3, freq.size // 20)
    floor0 = float(np.median(np.concatenate([values[:k], values[-k:]])))
    resid = values - floor0
    ipk = int(np.argmax(np.abs(resid)))
    height0 = resid[ipk]
    weights = np.abs(resid)
    wsum = weights.sum()
    center0 = float((freq * weights).sum() / wsum) if wsum > 0 else freq[ipk]

    above = np.abs(resid) >= 0.5 * abs(height0)
    if above.any():
        apparent = freq[above][-1] - freq[above][0]
    else:
        apparent = (freq[-1] - freq[0]) / 10.0
    gauss_fwhm = 2.0 * math.sqrt(2.0 * math.log(2.0)) * sigma_rbw
    fwhm0 = max(apparent - gauss_fwhm, apparent / 100.0,
                2.0 * (freq[1] - freq[0]))
    area0 = height0 * math.pi * fwhm0 / 2.0
    return np.array([center0, fwhm0, area0, floor0])


def fit_peak(spec: Spectrum, model: str = "lorentzian",
             init=None) -> PeakFit:
    """Trust-region least squares of one peak over (center, width, area, floor).

    model is "lorentzian" or "voigt"; for "voigt" the Gaussian width is fixed
    from the spectrum's RBW and never fitted.  Negative areas (dips) are
    allowed.  Parameter covariance comes from the Jacobian at the solution,
    scaled by the residual variance.
    """
    if model not in ("lorentzian", "voigt"):
        raise ValueError(f"unknown model {model!r}")
    sigma_rbw = sigma_from_rbw(spec.rbw) if model == "voigt" else 0.0
    freq = spec.freq
    values = spec.values

    p0 = np.asarray(init, dtype=float) if init is not None \
        else _initial_guess(freq, values, sigma_rbw)

    scale = np.array([max(abs(p0[0]), freq[-1] - freq[0]),
                      max(p0[1], 1e-12),
                      max(abs(p0[2]), 1e-12),
                      max(abs(p0[3]), abs(p0[2]) / max(p0[1], 1e-12), 1e-12)])

    def residuals(p):
        return _peak_model(freq, p[0], p[1], p[2], p[3], sigma_rbw) - values

    width_floor = 1e-9 * max(p0[1], freq[1] - freq[0])
    result = least_squares(
        residuals, p0, method="trf", x_scale=scale,
        bounds=([-np.inf, width_floor, -np.inf, -np.inf],
                [np.inf, np.inf, np.inf, np.inf]),
        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=400)
    if result.status == 0:
        raise FitNonConvergence("peak fit hit the evaluation cap")

    jac = result.jac
    singulars = np.linalg.svd(jac, compute_uv=False)
    if singulars[-1] <= 0.0 or singulars[0] / singulars[-1] > 1e12:
        raise IllConditioned(
            f"fit Jacobian condition number {singulars[0] / max(singulars[-1], 1e-300):.3g}")

    dof = max(freq.size - 4, 1)
    s2 = 2.0 * result.cost / dof
    cov = np.linalg.inv(jac.T @ jac) * s2

    center, fwhm, area, floor = result.x
    height = 2.0 * area / (math.pi * fwhm)
    return PeakFit(center=float(center), width=float(fwhm),
                   height=float(height), area=float(area), floor=float(floor),
                   covariance=cov, model=model, sigma_rbw=sigma_rbw)


def integrate_peak(spec: Spectrum, floor_estimate: float = 0.0, *,
                   min_points: int = 5, wing_correction: bool = True) -> float:
    """Photon flux of a resolved peak: trapezoid of (values - floor).

    The grid must resolve the peak (at least min_points samples above half
    maximum, else PeakUnresolved points the caller to fit_peak).  With
    wing_correction the truncated 1/nu^2 Lorentzian tails are estimated from
    the outermost samples and added, which brings wide-grid integrals of
    noiseless Lorentzians/Voigts to ~1e-8 relative of the true area.
    """
    freq = spec.freq
    resid = spec.values - floor_estimate
    peak = float(np.max(np.abs(resid)))
    if peak > 0.0:
        n_above = int(np.count_nonzero(np.abs(resid) >= 0.5 * peak))
        if n_above < min_points:
            raise PeakUnresolved(
                f"only {n_above} samples above half maximum; fit_peak "
                "should be used for under-resolved lines")

    flux = float(np.trapezoid(resid, freq))
    if wing_correction and peak > 0.0:
        center = float(freq[int(np.argmax(np.abs(resid)))])
        x = freq - center
        k = max(3, freq.size // 200)
        # wings fall off as a/x^2 with a = area * fwhm / (2 pi)
        a_left = float(np.mean(resid[:k] * x[:k] ** 2))
        a_right = float(np.mean(resid[-k:] * x[-k:] ** 2))
        flux += a_left / abs(x[0]) + a_right / x[-1]
    return flux


@dataclass(frozen=True)
class LinearFitResult:
    slope: float
    intercept: float
    covariance: np.ndarray   # 2x2 over (slope, intercept)
    chi2: float
    dof: int

    @property
    def slope_err(self) -> float:
        return math.sqrt(self.covariance[0, 0])

    @property
    def intercept_err(self) -> float:
        return math.sqrt(self.covariance[1, 1])


def linear_fit(x, y, sigma_y=None) -> LinearFitResult:
    """Closed-form weighted least squares y = slope * x + intercept.

    With sigma_y the covariance is the standard WLS one; without, residual
    variance is estimated from the fit (and the covariance is zero for an
    exactly determined two-point fit, with a warning).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise DegenerateDesign("need at least two (x, y) points")
    if np.ptp(x) == 0.0:
        raise DegenerateDesign("all x values identical")

    if sigma_y is None:
        w = np.ones_like(x)
    else:
        sigma_y = np.asarray(sigma_y, dtype=float)
        if np.any(sigma_y <= 0.0):
            raise ValueError("sigma_y must be > 0")
        w = 1.0 / sigma_y**2

    s = w.sum()
    sx = (w * x).sum()
    sy = (w * y).sum()
    sxx = (w * x * x).sum()
    sxy = (w * x * y).sum()
    delta = s * sxx - sx * sx
    if delta <= 0.0:
        raise DegenerateDesign("singular design matrix")
    slope = (s * sxy - sx * sy) / delta
    intercept = (sxx * sy - sx * sxy) / delta
    cov = np.array([[s, -sx], [-sx, sxx]]) / delta

    residuals = y - slope * x - intercept
    chi2 = float((w * residuals**2).sum())
    dof = x.size - 2
    if sigma_y is None:
        if dof > 0:
            cov = cov * (chi2 / dof)
        else:
            warnings.warn("exactly determined fit: zero degrees of freedom, "
                          "covariance set to zero", UserWarning, stacklevel=2)
            cov = np.zeros((2, 2))
    return LinearFitResult(slope=float(slope), intercept=float(intercept),
                           covariance=cov, chi2=chi2, dof=dof)
