"""The continuous-time limit of Adam and its fixed-step integrator.

With beta_i = exp(-dt / tau_i) and a learning rate eta = eta_bar * dt, the
discrete recurrences converge (dt -> 0) to the coupled per-coordinate system

    tau1 * m'(t)  = -m(t) + g(t)
    tau2 * v'(t)  = -v(t) + g(t)**2
    theta'(t)     = -eta_bar * m(t) / sqrt(v(t))

The normalized update R(t) = m(t) / sqrt(v(t)) is what the invariance
analysis tracks.  Integration is classical fourth-order Runge-Kutta with a
fixed step, which keeps traces uniformly sampled for the oscillation
metrics; the moment equations are linear, so the scheme's global O(h^4)
error is easy to verify against the analytic exponential-mode solutions
below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FlowAbort
from .signals import GradientSignal

BURN_IN_FACTOR = 10.0  # transients treated as decayed after 10 * max(tau)


def tau_from_beta(beta: float, dt: float) -> float:
    """Relaxation time tau = -dt / ln(beta) of a discrete EMA coefficient."""
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0,1), got {beta}")
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    return -dt / math.log(beta)


def beta_from_tau(tau: float, dt: float) -> float:
    """Inverse map beta = exp(-dt / tau)."""
    if tau <= 0.0 or dt <= 0.0:
        raise DomainError("tau and dt must be positive")
    return math.exp(-dt / tau)


@dataclass(frozen=True)
class TimeScales:
    """Continuous-time parameters of the flow."""

    tau1: float
    tau2: float
    eta_bar: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("tau1", "tau2", "eta_bar", "dt"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be strictly positive")

    @property
    def beta1(self) -> float:
        return beta_from_tau(self.tau1, self.dt)

    @property
    def beta2(self) -> float:
        return beta_from_tau(self.tau2, self.dt)

    @property
    def tau_max(self) -> float:
        return max(self.tau1, self.tau2)

    @property
    def burn_in(self) -> float:
        return BURN_IN_FACTOR * self.tau_max

    @classmethod
    def from_betas(cls, beta1: float, beta2: float, dt: float, eta: float) -> "TimeScales":
        """Discrete (beta1, beta2, eta) at step dt mapped to flow time scales."""
        return cls(tau1=tau_from_beta(beta1, dt), tau2=tau_from_beta(beta2, dt),
                   eta_bar=eta / dt, dt=dt)


@dataclass(frozen=True)
class FlowState:
    """Instantaneous flow state; ``clamped`` flags a v floor applied at init."""

    m: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    clamped: bool = False


@dataclass(frozen=True)
class FlowTrace:
    """Uniformly sampled flow trajectory."""

    t: np.ndarray          # (n,)
    m: np.ndarray          # (n, d)
    v: np.ndarray          # (n, d)
    r: np.ndarray          # (n, d)
    theta: np.ndarray      # (n, d)
    timescales: TimeScales
    signal_kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def norm_r(self) -> np.ndarray:
        return np.linalg.norm(self.r, axis=1)

    def after(self, t_min: float) -> "FlowTrace":
        """Sub-trace with t >= t_min (burn-in exclusion)."""
        keep = self.t >= t_min
        if not np.any(keep):
            raise DomainError(f"no samples at t >= {t_min}")
        return FlowTrace(self.t[keep], self.m[keep], self.v[keep], self.r[keep],
                         self.theta[keep], self.timescales, self.signal_kind, self.meta)


def flow_rhs(state: FlowState, signal: GradientSignal, ts: TimeScales):
    """Right-hand side (dm/dt, dv/dt, dtheta/dt) of the flow at ``state``."""
    if np.any(state.v <= 0.0):
        raise DomainError("flow right-hand side needs v > 0 coordinate-wise")
    g = signal.g(state.t)
    dm = (-state.m + g) / ts.tau1
    dv = (-state.v + g * g) / ts.tau2
    dtheta = -ts.eta_bar * state.m / np.sqrt(state.v)
    return dm, dv, dtheta


def steady_state_exponential_gains(delta0: float, ts: TimeScales) -> tuple[float, float, float]:
    """Exact asymptotic ratios (m/g, v/g^2, R/sign(g)) under g(t) = c e^{delta0 t}.

    Substituting the exponential ansatz into the linear moment equations gives

        m_gain = 1 / (1 + tau1 * delta0)
        v_gain = 1 / (1 + 2 * tau2 * delta0)
        R_gain = m_gain / sqrt(v_gain)

    valid whenever both denominators stay positive (pole guard).
    """
    pm = 1.0 + ts.tau1 * delta0
    pv = 1.0 + 2.0 * ts.tau2 * delta0
    if pm <= 0.0 or pv <= 0.0:
        raise DomainError(f"steady-state pole crossed: 1+tau1*d0={pm}, 1+2*tau2*d0={pv}")
    m_gain = 1.0 / pm
    v_gain = 1.0 / pv
    return m_gain, v_gain, m_gain / math.sqrt(v_gain)


def steady_state_init(signal: GradientSignal, ts: TimeScales, t0: float = 0.0) -> FlowState:
    """First-order steady initialization m = g(1 - tau1 d), v = g^2 (1 - 2 tau2 d).

    Skips the O(exp(-t/tau)) transient up to the expansion remainder.  v is
    floored at a small positive multiple of g^2 if the first-order formula
    goes nonpositive; the returned state is flagged ``clamped`` in that case.
    """
    g0 = signal.g(t0)
    if np.any(g0 == 0.0):
        raise DomainError(f"steady-state init needs g(t0) nonzero, got {g0}")
    d0 = signal.delta(t0)
    m = g0 * (1.0 - ts.tau1 * d0)
    v = g0 * g0 * (1.0 - 2.0 * ts.tau2 * d0)
    floor = 1e-12 * g0 * g0
    clamped = bool(np.any(v <= 0.0))
    v = np.maximum(v, floor)
    return FlowState(m=m, v=v, theta=np.zeros_like(g0), t=t0, clamped=clamped)


def integrate_flow(signal: GradientSignal, ts: TimeScales, init: FlowState,
                   t_end: float, h: float | None = None, record_stride: int = 1) -> FlowTrace:
    """Fixed-step RK4 integration of the flow from ``init`` to ``t_end``.

    The step is rounded so the grid hits ``t_end`` exactly; every
    ``record_stride``-th state is recorded (plus the initial one).  Aborts
    with ``FlowAbort`` if any v coordinate reaches zero, which signals a
    violated gradient-floor assumption rather than an integrator failure.
    """
    if h is None:
        h = min(ts.tau1, ts.tau2) / 50.0
    if h <= 0.0:
        raise DomainError(f"step must be positive, got {h}")
    if t_end <= init.t:
        raise DomainError(f"t_end={t_end} must exceed init.t={init.t}")
    if np.any(init.v <= 0.0):
        raise DomainError("initial v must be strictly positive")

    n_steps = max(1, round((t_end - init.t) / h))
    h = (t_end - init.t) / n_steps
    d = init.m.size

    def rhs(t: float, m: np.ndarray, v: np.ndarray):
        if np.any(v <= 0.0):
            raise FlowAbort(t, f"v crossed zero at t={t:.6g}: gradient floor assumption violated")
        g = signal.g(t)
        return (-m + g) / ts.tau1, (-v + g * g) / ts.tau2, -ts.eta_bar * m / np.sqrt(v)

    n_rec = n_steps // record_stride + 1
    rec_t = np.empty(n_rec)
    rec_m = np.empty((n_rec, d))
    rec_v = np.empty((n_rec, d))
    rec_th = np.empty((n_rec, d))

    m, v, th = init.m.astype(float).copy(), init.v.astype(float).copy(), init.theta.astype(float).copy()
    t = init.t
    rec_t[0], rec_m[0], rec_v[0], rec_th[0] = t, m, v, th
    j = 1
    for i in range(n_steps):
        k1m, k1v, k1t = rhs(t, m, v)
        k2m, k2v, k2t = rhs(t + 0.5 * h, m + 0.5 * h * k1m, v + 0.5 * h * k1v)
        k3m, k3v, k3t = rhs(t + 0.5 * h, m + 0.5 * h * k2m, v + 0.5 * h * k2v)
        k4m, k4v, k4t = rhs(t + h, m + h * k3m, v + h * k3v)
        m = m + (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        th = th + (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        t = init.t + (i + 1) * h
        if np.any(v <= 0.0):
            raise FlowAbort(t, f"v crossed zero at t={t:.6g}: gradient floor assumption violated")
        if (i + 1) % record_stride == 0:
            rec_t[j], rec_m[j], rec_v[j], rec_th[j] = t, m, v, th
            j += 1

    rec_t, rec_m, rec_v, rec_th = rec_t[:j], rec_m[:j], rec_v[:j], rec_th[:j]
    rec_r = rec_m / np.sqrt(rec_v)
    return FlowTrace(t=rec_t, m=rec_m, v=rec_v, r=rec_r, theta=rec_th,
                     timescales=ts, signal_kind=signal.kind,
                     meta={"h": h, "record_stride": record_stride, **signal.params})
