"""Time-domain readout through optomechanical amplification.

A blue-detuned pump turns the cavity into a phase-insensitive amplifier of
the mechanical quadratures: the filtered output amplitude is
A = sqrt(G_opt) (b(0) + c_opt^dag), so measured (I, Q) variances relate to
the mechanical quadratures as <I^2> = G_opt (<X1^2> + n_add_opt + 1/2) with
the quadrature convention X = (b + b^dag)/sqrt(2), vacuum variance 1/2.

Monte-Carlo sampling happens directly at the level of the final (I, Q)
Gaussians; full time-trace synthesis exists only as a generator for filter
diagnostics.  All Monte-Carlo draws are seeded deterministically; per-point
streams derive from (seed, point index) so results do not depend on how work
is partitioned.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import chi2 as chi2_dist

from .core import TWO_PI, BathOccupations, SystemParams
from .errors import (
    DegenerateDesign,
    LowGainWarning,
    NegativeVarianceEstimate,
    NonPositiveAmplification,
    NonPositiveRate,
)
from .fitting import LinearFitResult, linear_fit


@dataclass(frozen=True)
class GaussianMechState:
    """Second-moment description of the mechanical mode.

    n is <b^dag b> and b2 the complex <b^2>; means are assumed zero.  The
    X(phi) = X1 cos(phi) + X2 sin(phi) variance is
    1/2 + n + |b2| cos(2 phi - arg b2), so the squeezed axis sits at
    arg(b2)/2 - pi/2.
    """

    n: float = 0.0
    b2: complex = 0.0j

    @classmethod
    def vacuum(cls) -> "GaussianMechState":
        return cls(n=0.0, b2=0.0j)

    @classmethod
    def thermal(cls, n: float) -> "GaussianMechState":
        return cls(n=n, b2=0.0j)

    @classmethod
    def squeezed_thermal(cls, n_th: float, r: float,
                         theta: float = 0.0) -> "GaussianMechState":
        """Squeezed thermal state with squeezed axis at angle theta.

        n = n_th cosh(2r) + sinh^2(r); |b2| = (n_th + 1/2) sinh(2r); at
        theta = 0 the squeezed axis is X1 with variance (n_th + 1/2) e^{-2r}.
        """
        if n_th < 0.0:
            raise NonPositiveRate("n_th must be >= 0")
        n = n_th * math.cosh(2.0 * r) + math.sinh(r) ** 2
        b2 = -(n_th + 0.5) * math.sinh(2.0 * r) * cmath.exp(2j * theta)
        return cls(n=n, b2=b2)

    def rotated(self, theta: float) -> "GaussianMechState":
        """State rotated by theta in phase space (axes move by +theta)."""
        return GaussianMechState(n=self.n, b2=self.b2 * cmath.exp(2j * theta))

    @property
    def var_x1(self) -> float:
        return 0.5 + self.n + self.b2.real

    @property
    def var_x2(self) -> float:
        return 0.5 + self.n - self.b2.real

    @property
    def cov_x1x2(self) -> float:
        return self.b2.imag

    @property
    def principal_variances(self):
        """(v_sq, v_asq) along the principal axes."""
        mag = abs(self.b2)
        return 0.5 + self.n - mag, 0.5 + self.n + mag

    @property
    def squeezed_axis_angle(self) -> float:
        """Angle of the squeezed axis in [-pi/2, pi/2); 0 for isotropic states."""
        if self.b2 == 0:
            return 0.0
        angle = 0.5 * cmath.phase(self.b2) - 0.5 * math.pi
        return (angle + math.pi / 2.0) % math.pi - math.pi / 2.0

    @property
    def squeezed_thermal_params(self):
        """(n_th, r) of the squeezed-thermal parametrisation."""
        v_sq, v_asq = self.principal_variances
        n_th = math.sqrt(max(v_sq * v_asq, 0.0)) - 0.5
        r = -0.25 * math.log(v_sq / v_asq) if v_sq > 0 else math.inf
        return n_th, r

    @property
    def is_physical(self) -> bool:
        v_sq, v_asq = self.principal_variances
        return v_sq * v_asq >= 0.25 - 1e-12


@dataclass(frozen=True)
class AmplifierSpec:
    """Blue-pump amplification settings and readout-chain context.

    gamma_opt_b is the anti-damping rate of the pump [Hz]; gamma_amp =
    gamma_opt_b - Gamma_m the net amplification rate [Hz]; tau the pulse
    length and dt the sample step [s].  chain_gain / n_add_h describe the
    microwave chain after the cavity; g_opt_uv2 / n_add_opt are the
    *calibrated* conversion factor [uV^2/quanta] and input-referred added
    noise of the whole amplification readout.
    """

    gamma_opt_b: float
    gamma_amp: float
    tau: float
    dt: float
    eta_kappa: float = 1.0
    chain_gain: float = 1.0
    n_add_h: float = 0.0
    g_opt_uv2: float = 1.0
    n_add_opt: float = 0.0

    def __post_init__(self):
        if self.tau <= 0.0 or self.dt <= 0.0:
            raise NonPositiveRate("tau and dt must be > 0")
        if self.gamma_amp > 0.0 and self.gain < 1e3:
            warnings.warn(
                f"amplification gain {self.gain:.3g} < 1e3: large-gain "
                "approximations degrade", LowGainWarning, stacklevel=2)

    @property
    def gain(self) -> float:
        """Power gain of the amplification pulse, exp(2 pi gamma_amp tau)."""
        return math.exp(TWO_PI * self.gamma_amp * self.tau)

    @property
    def gain_db(self) -> float:
        return 10.0 * math.log10(self.gain)


def amplifier_spec(gamma_opt_b: float, gamma_m: float, tau: float, dt: float,
                   **kwargs) -> AmplifierSpec:
    """Build an AmplifierSpec with gamma_amp derived from the bare damping."""
    return AmplifierSpec(gamma_opt_b=gamma_opt_b,
                         gamma_amp=gamma_opt_b - gamma_m,
                         tau=tau, dt=dt, **kwargs)


@dataclass(frozen=True)
class MatchedFilter:
    """Discrete matched-filter weights m(t) on [0, tau]."""

    times: np.ndarray
    weights: np.ndarray
    dt: float
    gain: float

    @property
    def gain_db(self) -> float:
        return 10.0 * math.log10(self.gain)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.weights) ** 2) * self.dt)


def matched_filter(spec: AmplifierSpec) -> MatchedFilter:
    """SNR-optimal exponential filter for the amplification readout.

    m(t) = sqrt(Gamma_amp / (e^{Gamma_amp tau} - 1)) e^{Gamma_amp t / 2}
    with the angular rate 2 pi gamma_amp; sampled at bin centers and
    renormalised so that sum |m|^2 dt = 1 exactly.
    """
    if spec.gamma_amp <= 0.0:
        raise NonPositiveAmplification(
            f"gamma_amp = {spec.gamma_amp!r} Hz must be > 0")
    nsteps = int(round(spec.tau / spec.dt))
    if nsteps < 1 or abs(nsteps * spec.dt - spec.tau) > 1e-9 * spec.tau:
        raise ValueError("dt must divide tau (within rounding)")
    rate = TWO_PI * spec.gamma_amp
    t = (np.arange(nsteps) + 0.5) * spec.dt
    weights = math.sqrt(rate / math.expm1(rate * spec.tau)) \
        * np.exp(rate * t / 2.0)
    weights = weights / math.sqrt(float(np.sum(weights**2) * spec.dt))
    return MatchedFilter(times=t, weights=weights, dt=spec.dt,
                         gain=math.exp(rate * spec.tau))


@dataclass(frozen=True)
class AddedNoiseBudget:
    """Input-referred added-noise terms of the amplification readout [quanta].

    hybridization: thermal quanta entering through the internal cavity port,
    (1 - eta_kappa) n_c_th.  decoherence: bath heating during the pulse,
    Gamma_m n_m_th / gamma_amp.  chain: microwave chain noise referred back
    through the optomechanical gain, n_add_h / (eta_kappa e^{Gamma_amp tau}).
    """

    hybridization: float
    decoherence: float
    chain: float

    @property
    def total(self) -> float:
        return self.hybridization + self.decoherence + self.chain

    @property
    def total_noise_quanta(self) -> float:
        """Mechanical vacuum + ideal amplifier half quanta + added terms."""
        return 1.0 + self.total

    @property
    def ordering(self):
        terms = {"hybridization": self.hybridization,
                 "decoherence": self.decoherence, "chain": self.chain}
        return tuple(sorted(terms, key=terms.get, reverse=True))


def predict_added_noise(spec: AmplifierSpec, params: SystemParams,
                        baths: BathOccupations) -> AddedNoiseBudget:
    """Itemised added-noise budget in the large-gain regime."""
    if spec.gamma_amp <= 0.0:
        raise NonPositiveAmplification("gamma_amp must be > 0")
    hybrid = (1.0 - spec.eta_kappa) * baths.n_c_th
    decoherence = params.gamma_m * baths.n_m_th / spec.gamma_amp
    chain = spec.n_add_h / (spec.eta_kappa * spec.gain)
    return AddedNoiseBudget(hybridization=hybrid, decoherence=decoherence,
                            chain=chain)


@dataclass(frozen=True)
class QuadratureBatch:
    """Monte-Carlo (I, Q) sample pairs in uV with their calibration context."""

    samples: np.ndarray          # shape (N, 2)
    g_opt: float                 # uV^2 per quanta
    n_add_opt: float
    seed: object = None
    state_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 1:
            raise ValueError("samples must have shape (N >= 1, 2)")
        if self.g_opt <= 0.0:
            raise NonPositiveRate("g_opt must be > 0")
        if self.n_add_opt < 0.0:
            raise NonPositiveRate("n_add_opt must be >= 0")

    @property
    def count(self) -> int:
        return self.samples.shape[0]


def sample_quadratures(state: GaussianMechState, g_opt: float,
                       n_add_opt: float, n_samples: int,
                       seed) -> QuadratureBatch:
    """Draw N zero-mean (I, Q) pairs for a state seen through the amplifier.

    <I^2> = g_opt (var_x1 + n_add_opt + 1/2), same for Q/X2, and the I-Q
    correlation is g_opt Im<b^2>.  Deterministic per seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    cov = g_opt * np.array([
        [state.var_x1 + n_add_opt + 0.5, state.cov_x1x2],
        [state.cov_x1x2, state.var_x2 + n_add_opt + 0.5]])
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 2))
    samples = z @ chol.T
    return QuadratureBatch(samples=samples, g_opt=g_opt,
                           n_add_opt=n_add_opt, seed=seed,
                           state_meta={"n": state.n, "b2_re": state.b2.real,
                                       "b2_im": state.b2.imag})


def variance_interval(second_moment: float, n_samples: int,
                      confidence: float = 0.6827):
    """Chi-squared confidence interval of a raw Gaussian second moment.

    N vhat / v ~ chi^2_N for zero-mean Gaussian samples, giving exact
    asymmetric intervals (lo, hi) around the estimate.
    """
    alpha = 0.5 * (1.0 - confidence)
    lo = second_moment * n_samples / chi2_dist.ppf(1.0 - alpha, n_samples)
    hi = second_moment * n_samples / chi2_dist.ppf(alpha, n_samples)
    return lo, hi


def _db_rel_half(v: float) -> float:
    if v <= 0.0:
        return -math.inf
    return 10.0 * math.log10(v / 0.5)


@dataclass(frozen=True)
class VarianceEstimate:
    """A noise-subtracted variance with its asymmetric interval.

    db values are referenced to the zero-point variance 1/2; db_plus and
    db_minus mirror the +up/-down error style of squeezing reports.
    """

    value: float
    lo: float
    hi: float

    @property
    def db(self) -> float:
        return _db_rel_half(self.value)

    @property
    def db_plus(self) -> float:
        return _db_rel_half(self.hi) - self.db

    @property
    def db_minus(self) -> float:
        return self.db - _db_rel_half(self.lo)


@dataclass(frozen=True)
class StateEstimate:
    """estimate_state output: recovered state plus per-axis statistics."""

    state: GaussianMechState
    n_m: float
    n_m_err: float
    v_sq: VarianceEstimate
    v_asq: VarianceEstimate
    axis_angle: float
    theta_scan: np.ndarray | None = None


def estimate_state(batch: QuadratureBatch, theta_grid=None) -> StateEstimate:
    """Invert a quadrature batch to mechanical second moments.

    <X^2> = <I^2>/g_opt - n_add_opt - 1/2 per axis and n_m = (<X1^2> +
    <X2^2>)/2 - 1/2; principal axes from the eigen-decomposition of the
    noise-subtracted covariance.  Negative variances near the vacuum are
    statistically allowed: they are flagged with a warning and reported,
    never clamped.
    """
    samples = batch.samples
    n_samples = batch.count
    sub = batch.n_add_opt + 0.5
    m11 = float(np.mean(samples[:, 0] ** 2))
    m22 = float(np.mean(samples[:, 1] ** 2))
    m12 = float(np.mean(samples[:, 0] * samples[:, 1]))

    v1 = m11 / batch.g_opt - sub
    v2 = m22 / batch.g_opt - sub
    c12 = m12 / batch.g_opt
    n_m = (v1 + v2) / 2.0 - 0.5
    b2 = complex((v1 - v2) / 2.0, c12)
    state = GaussianMechState(n=n_m, b2=b2)

    cov = np.array([[v1, c12], [c12, v2]])
    eigvals, eigvecs = np.linalg.eigh(cov)
    v_sq_val, v_asq_val = float(eigvals[0]), float(eigvals[1])
    vec = eigvecs[:, 0]
    axis_angle = math.atan2(vec[1], vec[0])
    axis_angle = (axis_angle + math.pi / 2.0) % math.pi - math.pi / 2.0

    if v_sq_val < 0.0:
        warnings.warn(
            f"noise-subtracted variance {v_sq_val:.4g} < 0 (statistically "
            "allowed near vacuum); reported unclamped",
            NegativeVarianceEstimate, stacklevel=2)

    def interval(measured, value):
        lo_m, hi_m = variance_interval(measured, n_samples)
        return VarianceEstimate(value=value,
                                lo=lo_m / batch.g_opt - sub,
                                hi=hi_m / batch.g_opt - sub)

    # principal-axis measured moments for the intervals
    rot = eigvecs.T @ np.array([[m11, m12], [m12, m22]]) @ eigvecs
    v_sq = interval(float(rot[0, 0]), v_sq_val)
    v_asq = interval(float(rot[1, 1]), v_asq_val)

    err1 = (v_sq.hi - v_sq.lo) / 2.0
    err2 = (v_asq.hi - v_asq.lo) / 2.0
    n_m_err = math.hypot(err1, err2) / 2.0

    theta_scan = None
    if theta_grid is not None:
        theta_grid = np.asarray(theta_grid, dtype=float)
        theta_scan = (0.5 + n_m
                      + b2.real * np.cos(2.0 * theta_grid)
                      + b2.imag * np.sin(2.0 * theta_grid))

    return StateEstimate(state=state, n_m=n_m, n_m_err=n_m_err, v_sq=v_sq,
                         v_asq=v_asq, axis_angle=axis_angle,
                         theta_scan=theta_scan)


@dataclass(frozen=True)
class AmplifierCalibration:
    g_opt: float
    n_add_opt: float
    g_opt_err: float
    n_add_err: float
    fit: LinearFitResult


def calibrate_amplifier(points, sigma=None) -> AmplifierCalibration:
    """Fit sigma^2 = G_opt (n_m + 1 + n_add_opt) to calibration points.

    points is a sequence of (n_m_known, variance_uv2); the slope is the
    conversion factor and intercept/slope - 1 the added noise.  Exactly two
    points give a zero-dof fit (warned); fewer, or degenerate n_m values,
    raise DegenerateDesign.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DegenerateDesign("need at least two calibration points")
    n_m, var = pts[:, 0], pts[:, 1]
    span = n_m.max() / max(n_m.min(), 1e-30) if n_m.min() > 0 else math.inf
    if pts.shape[0] >= 3 and span < 10.0:
        warnings.warn("calibration points span less than a decade in n_m",
                      UserWarning, stacklevel=2)
    fit = linear_fit(n_m, var, sigma)
    g_opt = fit.slope
    if g_opt <= 0.0:
        raise DegenerateDesign("fitted conversion factor is not positive")
    n_add = fit.intercept / g_opt - 1.0
    var_s = fit.covariance[0, 0]
    var_i = fit.covariance[1, 1]
    cov_si = fit.covariance[0, 1]
    ratio = fit.intercept / g_opt
    n_add_err = abs(ratio) * math.sqrt(
        max(var_i / fit.intercept**2 + var_s / g_opt**2
            - 2.0 * cov_si / (fit.intercept * g_opt), 0.0)) \
        if fit.intercept != 0.0 else math.sqrt(var_i) / g_opt
    return AmplifierCalibration(g_opt=float(g_opt), n_add_opt=float(n_add),
                                g_opt_err=float(math.sqrt(var_s)),
                                n_add_err=float(n_add_err), fit=fit)


def evolve_moments_free(state: GaussianMechState, t: float, gamma_m: float,
                        n_m_th: float,
                        gamma_phi: float = 0.0) -> GaussianMechState:
    """Free thermalization of the second moments (finite-temperature form).

    n(t) = n_th + (n0 - n_th) e^{-2 pi Gamma_m t};
    b2(t) = b2(0) e^{-(2 pi Gamma_m + 8 pi Gamma_phi) t}.
    """
    decay = math.exp(-TWO_PI * gamma_m * t)
    n_t = n_m_th + (state.n - n_m_th) * decay
    b2_t = state.b2 * math.exp(-(TWO_PI * gamma_m
                                 + 4.0 * TWO_PI * gamma_phi) * t)
    return GaussianMechState(n=n_t, b2=b2_t)


@dataclass(frozen=True)
class FreeEvolutionResult:
    times: np.ndarray
    batches: tuple
    n_est: np.ndarray
    n_err: np.ndarray
    gamma_th_fit: float          # short-time heating rate [Hz, cyclic]
    gamma_th_err: float
    gamma_m_fit: float           # exponential-fit relaxation rate [Hz]
    n_eq_fit: float
    t_one_quantum: float         # time for the fitted curve to reach 1 quantum


def free_evolution_experiment(prep: GaussianMechState, gamma_th: float,
                              gamma_m: float, n_m_th: float, times,
                              readout: AmplifierSpec, n_samples: int, seed,
                              gamma_phi: float = 0.0,
                              linear_window: float = 2e-3) -> FreeEvolutionResult:
    """Simulated thermalization run: evolve, sample, estimate, fit.

    For each evolution time the second moments are propagated, a quadrature
    batch of n_samples is drawn through the calibrated readout, and the
    occupation re-estimated.  The short-time linear fit (t <= linear_window)
    returns the thermal decoherence rate; an exponential fit over the full
    window gives the relaxation rate, equilibrium occupation and the time to
    reach one quantum.  gamma_th is the expected (n_m_th + 1) gamma_m rate
    and is only carried through for reporting; the evolution uses gamma_m.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0.0):
        raise ValueError("evolution times must be >= 0")
    batches = []
    n_est = np.empty_like(times)
    n_err = np.empty_like(times)
    for idx, t in enumerate(times):
        evolved = evolve_moments_free(prep, float(t), gamma_m, n_m_th,
                                      gamma_phi)
        batch = sample_quadratures(evolved, readout.g_opt_uv2,
                                   readout.n_add_opt, n_samples,
                                   seed=[seed, idx])
        est = estimate_state(batch)
        batches.append(batch)
        n_est[idx] = est.n_m
        n_err[idx] = est.n_m_err

    short = times <= linear_window
    lin = linear_fit(times[short], n_est[short], n_err[short]
                     if np.all(n_err[short] > 0) else None)
    gamma_th_fit = lin.slope / TWO_PI
    gamma_th_err = lin.slope_err / TWO_PI

    n0 = prep.n

    def model(p, t):
        n_eq, rate = p
        return n_eq + (n0 - n_eq) * np.exp(-TWO_PI * rate * t)

    fit = least_squares(lambda p: model(p, times) - n_est,
                        x0=[max(n_m_th, 1.0), max(gamma_m, 1e-6)],
                        method="lm")
    n_eq_fit, gamma_m_fit = fit.x

    if n_eq_fit > 1.0 and n0 < 1.0:
        t_one = math.log((n_eq_fit - n0) / (n_eq_fit - 1.0)) \
            / (TWO_PI * gamma_m_fit)
    else:
        t_one = math.inf

    return FreeEvolutionResult(
        times=times, batches=tuple(batches), n_est=n_est, n_err=n_err,
        gamma_th_fit=float(gamma_th_fit), gamma_th_err=float(gamma_th_err),
        gamma_m_fit=float(gamma_m_fit), n_eq_fit=float(n_eq_fit),
        t_one_quantum=float(t_one))


def synthesize_readout_trace(spec: AmplifierSpec, initial=(1.0, 0.0),
                             noise_std: float = 0.0, seed=None):
    """Generate an exponentially growing (I, Q) trace with white noise.

    Diagnostic generator for filter studies only: the statistics pipelines
    sample final (I, Q) amplitudes directly.  Returns (times, traces) with
    traces of shape (nsteps, 2).
    """
    if spec.gamma_amp <= 0.0:
        raise NonPositiveAmplification("gamma_amp must be > 0")
    nsteps = int(round(spec.tau / spec.dt))
    t = (np.arange(nsteps) + 0.5) * spec.dt
    envelope = np.exp(TWO_PI * spec.gamma_amp * t / 2.0)
    traces = np.outer(envelope, np.asarray(initial, dtype=float))
    if noise_std > 0.0:
        rng = np.random.default_rng(seed)
        traces = traces + rng.standard_normal(traces.shape) * noise_std
    return t, traces
