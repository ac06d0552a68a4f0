"""Dissipative squeezing and dephasing-limited thermalization.

Two balanced-detuned pumps cool a Bogoliubov mode beta = cosh(r) b +
sinh(r) b^dag with tanh(r) = sqrt(Gamma_b/Gamma_r); its ground state is a
squeezed state of motion.  Free evolution of such a phase-sensitive state is
the probe for pure dephasing: under

    drho/dt = 2 pi [ Gth D[b] + Gth D[b^dag] + 2 Gphi D[b^dag b] ] rho

(the high-bath-occupation form) the occupation grows as d<n>/dt = 2 pi Gth
while <b^2> decays as exp(-8 pi Gphi t), so the squeezed/anti-squeezed
variance slopes split by 8 Gphi sinh(r) cosh(r) (1 + 2 n_th) in cyclic
units.  Closed moment equations are the primary engine; the truncated-Fock
density-matrix solver is the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .core import TWO_PI
from .errors import (
    NonMonotoneCurve,
    NonPositiveRate,
    StepRejectionOverflow,
    TruncationNonConvergence,
    UnphysicalVariances,
    UnstableSqueeze,
)
from .fitting import linear_fit
from .tomography import GaussianMechState


@dataclass(frozen=True)
class SqueezeDrive:
    """Red/blue pump pair of the dissipative squeezing scheme.

    gamma_r/gamma_b are the optomechanical damping/anti-damping rates [Hz];
    ratio_db = 10 log10(gamma_b/gamma_r); r_target the squeezing parameter
    with tanh(r) = sqrt(gamma_b/gamma_r); coupling_g the Bogoliubov-mode
    coupling sqrt(kappa/4) sqrt(gamma_r - gamma_b) [Hz].
    """

    gamma_r: float
    gamma_b: float
    ratio_db: float
    r_target: float
    coupling_g: float

    def __post_init__(self):
        if self.gamma_b < 0.0 or self.gamma_r <= 0.0:
            raise NonPositiveRate("need gamma_r > 0 and gamma_b >= 0")
        if self.gamma_b >= self.gamma_r:
            raise UnstableSqueeze(
                "gamma_b >= gamma_r: the Bogoliubov mode is not damped")


def squeeze_drive(gamma_r: float, gamma_b: float,
                  kappa: float) -> SqueezeDrive:
    """Build a SqueezeDrive with the derived fields populated."""
    if gamma_b < 0.0 or gamma_r <= 0.0:
        raise NonPositiveRate("need gamma_r > 0 and gamma_b >= 0")
    if gamma_b >= gamma_r:
        raise UnstableSqueeze(
            "gamma_b >= gamma_r: the Bogoliubov mode is not damped")
    ratio_db = 10.0 * math.log10(gamma_b / gamma_r) if gamma_b > 0 \
        else -math.inf
    r = math.atanh(math.sqrt(gamma_b / gamma_r))
    coupling = math.sqrt(kappa / 4.0) * math.sqrt(gamma_r - gamma_b)
    return SqueezeDrive(gamma_r=gamma_r, gamma_b=gamma_b, ratio_db=ratio_db,
                        r_target=r, coupling_g=coupling)


def squeeze_target(drive: SqueezeDrive):
    """Ideal steady state of the drive: (r, var_sq, var_asq).

    r = atanh(sqrt(gamma_b/gamma_r)); the ideal variances are e^{-2r}/2 and
    e^{+2r}/2 (pure squeezed vacuum; thermal occupation degrades this).
    """
    r = drive.r_target
    return r, 0.5 * math.exp(-2.0 * r), 0.5 * math.exp(2.0 * r)


def squeezing_limit(n_m_th: float, cooperativity: float) -> float:
    """Steady-state squeezing bound 2<X_sq^2> = sqrt((1 + 2 n_m_th)/C), in dB."""
    if cooperativity <= 0.0:
        raise NonPositiveRate("cooperativity must be > 0")
    if n_m_th < 0.0:
        raise NonPositiveRate("n_m_th must be >= 0")
    return 10.0 * math.log10(math.sqrt((1.0 + 2.0 * n_m_th) / cooperativity))


def squeezed_thermal_from_variances(v_sq: float, v_asq: float):
    """(n_th, r) of the squeezed thermal state with the given axis variances.

    n_th = sqrt(v_sq v_asq) - 1/2 and r = -ln(v_sq/v_asq)/4; the product
    must satisfy the Heisenberg bound v_sq v_asq >= 1/4.
    """
    if v_sq > v_asq:
        raise ValueError("expected v_sq <= v_asq")
    if v_sq <= 0.0:
        raise UnphysicalVariances("v_sq must be > 0")
    product = v_sq * v_asq
    if product < 0.25 - 1e-9:
        raise UnphysicalVariances(
            f"v_sq * v_asq = {product:.6g} < 1/4 violates Heisenberg")
    n_th = math.sqrt(product) - 0.5
    r = -0.25 * math.log(v_sq / v_asq)
    return n_th, r


@dataclass(frozen=True)
class DephasingModel:
    """Free-evolution model: thermal decoherence plus pure dephasing.

    mode "high_temperature" is the equal-rate dissipator pair (valid for
    n_m_th >> 1, no equilibrium); "finite_temperature" uses Gamma_m(n+1)/
    Gamma_m n dissipators and saturates at n_m_th (needs gamma_m, n_m_th).
    truncation_dim caps the Fock space of the density-matrix solver; None
    selects it adaptively.
    """

    gamma_th: float
    gamma_phi: float
    initial: GaussianMechState
    truncation_dim: int | None = None
    mode: str = "high_temperature"
    gamma_m: float | None = None
    n_m_th: float | None = None

    def __post_init__(self):
        if self.gamma_th < 0.0 or self.gamma_phi < 0.0:
            raise NonPositiveRate("rates must be >= 0")
        if self.mode not in ("high_temperature", "finite_temperature"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "finite_temperature" and (
                self.gamma_m is None or self.n_m_th is None):
            raise ValueError("finite_temperature mode needs gamma_m and n_m_th")


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    n: np.ndarray
    b2: np.ndarray              # complex <b^2>
    v_sq: np.ndarray
    v_asq: np.ndarray


def moments_evolve(model: DephasingModel, times) -> MomentTrajectory:
    """Exact second-moment evolution under the dephasing master equation.

    High-temperature form: d<n>/dt = 2 pi Gth (linear heating), d<b^2>/dt =
    -2 pi (4 Gphi) <b^2>.  Finite-temperature form relaxes n to n_m_th at
    2 pi Gamma_m and adds that decay to <b^2>.  Axis variances are
    1/2 + n -+ |<b^2>| along the principal axes.
    """
    t = np.asarray(times, dtype=float)
    n0 = model.initial.n
    b2_0 = model.initial.b2
    phi_decay = np.exp(-4.0 * TWO_PI * model.gamma_phi * t)
    if model.mode == "high_temperature":
        n = n0 + TWO_PI * model.gamma_th * t
        b2 = b2_0 * phi_decay
    else:
        relax = np.exp(-TWO_PI * model.gamma_m * t)
        n = model.n_m_th + (n0 - model.n_m_th) * relax
        b2 = b2_0 * relax * phi_decay
    mag = np.abs(b2)
    return MomentTrajectory(times=t, n=n, b2=b2, v_sq=0.5 + n - mag,
                            v_asq=0.5 + n + mag)


@dataclass(frozen=True)
class DecoherenceRates:
    """Linear-fit decoherence rates of the axis variances [Hz, cyclic].

    gamma_th_est = (gamma_sq + gamma_asq)/2 by construction: dephasing
    conserves <n>, so the mean slope is the thermal decoherence rate.
    """

    gamma_sq: float
    gamma_asq: float
    gamma_sq_err: float = 0.0
    gamma_asq_err: float = 0.0

    @property
    def gamma_th_est(self) -> float:
        return 0.5 * (self.gamma_sq + self.gamma_asq)

    @property
    def delta(self) -> float:
        return self.gamma_sq - self.gamma_asq

    @property
    def delta_err(self) -> float:
        return math.hypot(self.gamma_sq_err, self.gamma_asq_err)


def decoherence_rates(times, v_sq, v_asq, sigma=None) -> DecoherenceRates:
    """Fit the variance slopes; rates are reported cyclic (slope / 2 pi)."""
    fit_sq = linear_fit(times, v_sq, sigma)
    fit_asq = linear_fit(times, v_asq, sigma)
    return DecoherenceRates(
        gamma_sq=fit_sq.slope / TWO_PI,
        gamma_asq=fit_asq.slope / TWO_PI,
        gamma_sq_err=fit_sq.slope_err / TWO_PI,
        gamma_asq_err=fit_asq.slope_err / TWO_PI)


def initial_slope_delta(model: DephasingModel) -> float:
    """Closed-form t -> 0 slope difference [Hz, cyclic].

    delta = 8 Gphi sinh(r) cosh(r) (1 + 2 n_th) for a squeezed thermal
    initial state; used as the oracle for fitted slope differences.
    """
    n_th, r = model.initial.squeezed_thermal_params
    return (8.0 * model.gamma_phi * math.sinh(r) * math.cosh(r)
            * (1.0 + 2.0 * n_th))


# ---- truncated-Fock density-matrix solver ----

def _fock_operators(dim: int):
    lower = sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr")
    number = sp.diags(np.arange(dim, dtype=float), 0, format="csr")
    return lower, number


def _dissipator(op) -> sp.spmatrix:
    """Row-major vectorised Lindblad dissipator for collapse operator op."""
    dim = op.shape[0]
    eye = sp.identity(dim, format="csr")
    opd_op = (op.conjugate().T @ op).tocsr()
    return (sp.kron(op, op.conjugate())
            - 0.5 * sp.kron(opd_op, eye)
            - 0.5 * sp.kron(eye, opd_op.T)).tocsc()


def _squeezed_thermal_rho(n_th: float, r: float, theta: float,
                          dim: int) -> np.ndarray:
    """Density matrix of a squeezed thermal state in a truncated Fock basis."""
    levels = np.arange(dim)
    if n_th > 0.0:
        q = n_th / (1.0 + n_th)
        populations = (1.0 - q) * q**levels
    else:
        populations = np.zeros(dim)
        populations[0] = 1.0
    rho = np.diag(populations).astype(complex)
    lower = np.diag(np.sqrt(np.arange(1, dim)), 1)
    generator = 0.5 * r * (lower @ lower - lower.T @ lower.T)
    squeeze_op = expm(generator)
    rho = squeeze_op @ rho @ squeeze_op.conjugate().T
    if theta != 0.0:
        phase = np.exp(1j * theta * levels)
        rho = (phase[:, None] * rho) * phase.conjugate()[None, :]
    return rho


def _liouvillian_parts(model: DephasingModel, dim: int):
    """Thermal Liouvillian plus the diagonal dephasing generator.

    The dephasing dissipator acts as the scalar -(j - k)^2/2 on each
    coherence rho_jk, i.e. it is constant on every coherence-offset block;
    the thermal dissipators preserve the offset, so the two parts commute
    exactly and the dephasing factor can be applied elementwise.  Splitting
    them keeps the stiff (j - k)^2 diagonal out of the Krylov propagation.
    """
    lower, _ = _fock_operators(dim)
    if model.mode == "high_temperature":
        down = TWO_PI * model.gamma_th
        up = TWO_PI * model.gamma_th
    else:
        down = TWO_PI * model.gamma_m * (model.n_m_th + 1.0)
        up = TWO_PI * model.gamma_m * model.n_m_th
    thermal = (down * _dissipator(lower)
               + up * _dissipator(lower.conjugate().T.tocsr())).tocsc()
    levels = np.arange(dim)
    offsets_sq = (levels[:, None] - levels[None, :]) ** 2
    dephasing_diag = (-TWO_PI * model.gamma_phi
                      * offsets_sq.reshape(-1).astype(float))
    return thermal, dephasing_diag


@dataclass(frozen=True)
class LindbladTrajectory:
    times: np.ndarray
    n: np.ndarray
    b2: np.ndarray
    v_sq: np.ndarray
    v_asq: np.ndarray
    var_x1: np.ndarray
    var_x2: np.ndarray
    dim: int
    trace_dev: np.ndarray        # |Tr rho - 1| per step
    min_eigenvalue: np.ndarray   # smallest eigenvalue per step
    top_population: np.ndarray   # highest-level population per step


def _propagate(model: DephasingModel, times: np.ndarray,
               dim: int) -> LindbladTrajectory:
    n_th0, r0 = model.initial.squeezed_thermal_params
    theta0 = model.initial.squeezed_axis_angle
    rho = _squeezed_thermal_rho(n_th0, r0, theta0, dim)
    thermal, dephasing_diag = _liouvillian_parts(model, dim)

    lower, number = _fock_operators(dim)
    b2_op = (lower @ lower).toarray()
    n_op = number.toarray()

    out_n = np.empty(times.size)
    out_b2 = np.empty(times.size, dtype=complex)
    trace_dev = np.empty(times.size)
    min_eig = np.empty(times.size)
    top_pop = np.empty(times.size)

    vec = rho.reshape(-1)
    steps = np.diff(times, prepend=0.0)
    uniform = times.size > 1 and np.allclose(
        steps[1:], steps[1], rtol=1e-10, atol=0.0) and times[0] == 0.0
    if uniform:
        stack = expm_multiply(thermal, vec, start=0.0, stop=float(times[-1]),
                              num=times.size, endpoint=True)
        stack = stack * np.exp(np.outer(times, dephasing_diag))
    else:
        stack = np.empty((times.size, vec.size), dtype=complex)
        prev_t = 0.0
        for idx, t in enumerate(times):
            span = t - prev_t
            if span > 0.0:
                vec = expm_multiply(thermal * span, vec)
                vec = vec * np.exp(dephasing_diag * span)
                prev_t = t
            stack[idx] = vec

    for idx, t in enumerate(times):
        row = stack[idx]
        if not np.all(np.isfinite(row)):
            raise StepRejectionOverflow(
                f"non-finite density matrix at t = {t:g} s (dim {dim})")
        rho_t = row.reshape(dim, dim)
        herm = 0.5 * (rho_t + rho_t.conjugate().T)
        out_n[idx] = float(np.real(np.trace(n_op @ herm)))
        out_b2[idx] = complex(np.trace(b2_op @ herm))
        trace_dev[idx] = abs(float(np.real(np.trace(rho_t))) - 1.0)
        min_eig[idx] = float(np.linalg.eigvalsh(herm)[0])
        top_pop[idx] = float(np.real(rho_t[-1, -1]))

    mag = np.abs(out_b2)
    return LindbladTrajectory(
        times=times, n=out_n, b2=out_b2, v_sq=0.5 + out_n - mag,
        v_asq=0.5 + out_n + mag,
        var_x1=0.5 + out_n + np.real(out_b2),
        var_x2=0.5 + out_n - np.real(out_b2),
        dim=dim, trace_dev=trace_dev, min_eigenvalue=min_eig,
        top_population=top_pop)


def _tail_dimension(model: DephasingModel, max_dim: int = 1024) -> int:
    """Smallest Fock dimension whose *initial-state* top populations are
    below 1e-10 (100x margin under the trajectory requirement; the thermal
    evolution over ms scales only shifts the tail by a few quanta)."""
    n_th0, r0 = model.initial.squeezed_thermal_params
    v_asq = (n_th0 + 0.5) * math.exp(2.0 * r0)
    dim = max(32, 32 * math.ceil(8.0 * v_asq / 32.0))
    while dim <= max_dim:
        rho = _squeezed_thermal_rho(n_th0, r0, 0.0, dim)
        if float(np.real(rho[-1, -1])) < 1e-10 \
                and float(np.real(rho[-2, -2])) < 1e-10:
            return dim
        dim += 32
    return max_dim


def _moment_drift(a: LindbladTrajectory, b: LindbladTrajectory) -> float:
    scale = max(float(np.max(np.abs(a.n))), 1.0)
    return max(float(np.max(np.abs(a.n - b.n))) / scale,
               float(np.max(np.abs(a.v_sq - b.v_sq))) / scale,
               float(np.max(np.abs(a.v_asq - b.v_asq))) / scale)


def lindblad_evolve(model: DephasingModel, times,
                    max_dim: int = 1024) -> LindbladTrajectory:
    """Density-matrix evolution in a truncated Fock basis.

    The time-independent Liouvillian is applied exactly through a sparse
    Krylov matrix exponential between requested times (the dephasing part,
    diagonal per coherence offset, commutes with the thermal part and is
    folded in elementwise).  The truncation dimension starts from the
    initial state's own population tail and doubles until the top-level
    population stays below 1e-8 along the whole trajectory and the reported
    moments agree with the half-dimension run to 1e-4 relative; an explicit
    model.truncation_dim bypasses the adaptation but is still checked.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0.0) or np.any(np.diff(times) < 0.0):
        raise ValueError("times must be >= 0 and sorted")

    if model.truncation_dim is not None:
        traj = _propagate(model, times, int(model.truncation_dim))
        if traj.top_population.max() > 1e-8:
            raise TruncationNonConvergence(
                f"top-level population {traj.top_population.max():.3g} > 1e-8 "
                f"at fixed dim {model.truncation_dim}")
        return traj

    dim = _tail_dimension(model)
    while dim <= max_dim:
        traj = _propagate(model, times, dim)
        if traj.top_population.max() < 1e-8:
            # stability against an independent (smaller but still
            # tail-converged) truncation
            ref_dim = max(16, dim - 64 if dim > 96 else dim // 2)
            reference = _propagate(model, times, ref_dim)
            if _moment_drift(traj, reference) < 1e-4:
                return traj
        dim *= 2
    raise TruncationNonConvergence(
        f"moments not stable below the dimension cap {max_dim}")


# ---- dephasing extraction ----

@dataclass(frozen=True)
class DephasingExtraction:
    gamma_phi: float
    lo: float
    hi: float
    curve_phi: np.ndarray       # sampled Gamma_phi grid of the forward curve
    curve_delta: np.ndarray     # corresponding rate differences


#: forward-curve cache keyed by (initial-state params, gamma_th, time grid)
_CURVE_CACHE: dict = {}


def _delta_of_phi(gamma_phi, initial, gamma_th, times):
    n_th, r = initial.squeezed_thermal_params
    key = (round(n_th, 12), round(r, 12), gamma_th, times.tobytes(),
           round(float(gamma_phi), 12))
    cached = _CURVE_CACHE.get(key)
    if cached is not None:
        return cached
    model = DephasingModel(gamma_th=gamma_th, gamma_phi=gamma_phi,
                           initial=initial)
    traj = moments_evolve(model, times)
    delta = decoherence_rates(times, traj.v_sq, traj.v_asq).delta
    if len(_CURVE_CACHE) > 4096:
        _CURVE_CACHE.clear()
    _CURVE_CACHE[key] = delta
    return delta


def _invert_delta(target, initial, gamma_th, times, tol):
    if target == 0.0:
        return 0.0
    if target < 0.0:
        raise ValueError("rate difference must be >= 0 for a squeezed state")
    lo, hi = 0.0, 1.0
    for _ in range(60):
        if _delta_of_phi(hi, initial, gamma_th, times) >= target:
            break
        hi *= 2.0
    else:
        raise ValueError(f"rate difference {target:.4g} Hz beyond the "
                         "achievable range for this initial state")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _delta_of_phi(mid, initial, gamma_th, times) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def extract_dephasing(observed, initial: GaussianMechState, *,
                      gamma_th: float, times=None, delta_err: float = 0.0,
                      n_th_err: float = 0.0, r_err: float = 0.0,
                      tol: float = 1e-4, curve_points: int = 33
                      ) -> DephasingExtraction:
    """Invert the slope-difference curve to the pure dephasing rate.

    observed is a DecoherenceRates record or the rate difference in Hz
    (cyclic).  The forward curve delta(Gamma_phi) is built from the moment
    equations with slopes fitted over `times` (default 0-5 ms); it is
    monotone, so bisection inverts it to `tol` Hz.  Input errors propagate
    by interval arithmetic: the upper dephasing bound pairs the high rate
    difference with the least-sensitive initial state and vice versa.
    """
    if isinstance(observed, DecoherenceRates):
        target = observed.delta
        if delta_err == 0.0:
            delta_err = observed.delta_err
    else:
        target = float(observed)
    if times is None:
        times = np.linspace(0.0, 5e-3, 11)
    times = np.asarray(times, dtype=float)

    phi_probe = max(target, delta_err, 1e-3)
    curve_phi = np.linspace(0.0, 4.0 * phi_probe, curve_points)
    curve_delta = np.array([_delta_of_phi(p, initial, gamma_th, times)
                            for p in curve_phi])
    if np.any(np.diff(curve_delta) < -1e-12):
        raise NonMonotoneCurve("delta(Gamma_phi) curve is not monotone")

    n_th, r = initial.squeezed_thermal_params
    gamma_phi = _invert_delta(target, initial, gamma_th, times, tol)

    lo_target = max(target - delta_err, 0.0)
    hi_target = target + delta_err
    stiff = GaussianMechState.squeezed_thermal(n_th + n_th_err, r + r_err)
    soft = GaussianMechState.squeezed_thermal(max(n_th - n_th_err, 0.0),
                                              max(r - r_err, 1e-6))
    lo = _invert_delta(lo_target, stiff, gamma_th, times, tol)
    hi = _invert_delta(hi_target, soft, gamma_th, times, tol)
    return DephasingExtraction(gamma_phi=gamma_phi, lo=lo, hi=hi,
                               curve_phi=curve_phi, curve_delta=curve_delta)
