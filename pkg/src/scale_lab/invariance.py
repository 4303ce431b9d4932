"""Operational probes of gradient scale invariance.

Three experiments:

* an instantaneous probe: freeze the optimizer state, rescale the current
  gradient by lambda > 0, and compare the update vectors;
* a first-order sensitivity fit: drive the flow with exponential drifts and
  fit how the asymptotic deviation of ||R|| from 1 scales with the drift
  rate (slope 2 when tau1 = tau2, slope 1 with coefficient |tau2 - tau1|
  otherwise);
* a step-rescale experiment: multiply a constant gradient stream by a
  piecewise schedule and record how ||R_k|| excurses and recovers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .drift import fit_power_law
from .errors import DomainError
from .flow import TimeScales, integrate_flow, steady_state_init
from .optimizers import (MomentState, OptimizerConfig, UpdateVector, adam_step,
                         adam_update, gd_step, signsgd_step)
from .signals import exponential_signal

EXACT_TOL = 1e-12  # classification threshold for exact invariance / linearity


def _update_for(method: str, state: MomentState | None, g: np.ndarray,
                config: OptimizerConfig | None) -> UpdateVector:
    if method == "signsgd":
        return signsgd_step(g)
    if method == "gd":
        return gd_step(g)
    if method == "adam":
        if state is None or config is None:
            raise DomainError("adam probe needs a frozen state and a config")
        return adam_update(state, g, config)
    raise DomainError(f"unknown optimizer id {method!r}")


@dataclass(frozen=True)
class RescaleProbeResult:
    """Deviations ||R(lambda g) - R(g)||_inf over a ladder of rescalings."""

    method: str
    lambda_values: list[float]
    deviations: list[float]
    classification: str  # exact-invariant | scale-linear | other

    def deviation_at(self, lam: float) -> float:
        return self.deviations[self.lambda_values.index(lam)]


def exact_invariance_probe(method: str, state: MomentState | None, g: np.ndarray,
                           lambdas: Sequence[float],
                           config: OptimizerConfig | None = None) -> RescaleProbeResult:
    """Probe one step with the internal state held fixed across rescalings."""
    lams = [float(l) for l in lambdas]
    if any(l <= 0.0 for l in lams):
        raise DomainError("rescaling factors must be strictly positive")
    g = np.asarray(g, dtype=float)
    base = _update_for(method, state, g, config).r
    deviations = []
    linear = True
    for lam in lams:
        scaled = _update_for(method, state, lam * g, config).r
        deviations.append(float(np.max(np.abs(scaled - base))))
        if float(np.max(np.abs(scaled - lam * base))) >= EXACT_TOL:
            linear = False
    if all(d < EXACT_TOL for d in deviations):
        cls = "exact-invariant"
    elif linear:
        cls = "scale-linear"
    else:
        cls = "other"
    return RescaleProbeResult(method=method, lambda_values=lams,
                              deviations=deviations, classification=cls)


@dataclass(frozen=True)
class SensitivityFit:
    """Fitted scale sensitivity of the flow's asymptotic update norm."""

    slope: float            # log-log slope of | ||R|| - 1 | against delta0
    coefficient: float      # |deviation / delta0| extrapolated to delta0 -> 0
    delta0_grid: list[float]
    deviations: list[float]         # | ||R||_inf - 1 | per drift rate
    signed_deviations: list[float]  # ||R||_inf - 1, sign kept


def first_order_sensitivity(ts: TimeScales, delta0_grid: Sequence[float],
                            h: float | None = None) -> SensitivityFit:
    """Fit the asymptotic deviation of ||R|| from 1 across exponential drifts.

    Each drift rate is integrated from the first-order steady initialization
    until well past burn-in, and the deviation is read off the final sample.
    The coefficient uses Richardson extrapolation on the two smallest rates
    (their ratio is assumed close to 2, as in a doubling grid), so the
    first-order coefficient is recovered even though the deviation carries
    an O(delta0^2) tail.
    """
    rates = sorted(float(d) for d in delta0_grid)
    if len(rates) < 3:
        raise DomainError(f"sensitivity fit needs at least 3 drift rates, got {len(rates)}")
    signed = []
    for d0 in rates:
        sig = exponential_signal(d0)
        init = steady_state_init(sig, ts, t0=0.0)
        t_end = 1.2 * ts.burn_in + 2.0 * ts.tau_max
        trace = integrate_flow(sig, ts, init, t_end=t_end, h=h)
        signed.append(float(np.max(np.abs(trace.r[-1]))) - 1.0)
    deviations = [abs(s) for s in signed]
    slope, _ = fit_power_law(rates, deviations)
    q0, q1 = signed[0] / rates[0], signed[1] / rates[1]
    coefficient = abs(2.0 * q0 - q1)
    return SensitivityFit(slope=slope, coefficient=coefficient, delta0_grid=rates,
                          deviations=deviations, signed_deviations=signed)


@dataclass(frozen=True)
class StepTrace:
    """Per-step record of a discrete run under a multiplier schedule."""

    steps: np.ndarray
    multiplier: np.ndarray
    norm_r: np.ndarray
    beta1: float
    beta2: float

    def transient_integral(self, start: int, reference: float | None = None) -> float:
        """Sum of |  ||R_k|| - reference | from ``start`` on.

        The reference defaults to the steady value before ``start``.
        """
        if reference is None:
            reference = float(self.norm_r[start - 1])
        return float(np.sum(np.abs(self.norm_r[start:] - reference)))


@dataclass(frozen=True)
class StepScaleExperiment:
    """A constant base gradient scaled by a step schedule, across a beta grid."""

    base: np.ndarray
    schedule: list[tuple[int, float]]        # (step index, multiplier), sorted
    beta_grid: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if any(m <= 0.0 for _, m in self.schedule):
            raise DomainError("multipliers must be strictly positive")

    def multiplier_at(self, k: int) -> float:
        mult = 1.0
        for start, m in sorted(self.schedule):
            if k >= start:
                mult = m
        return mult


def run_step_scale_experiment(exp: StepScaleExperiment, config: OptimizerConfig,
                              steps: int, init: str = "steady",
                              method: str = "adam") -> StepTrace:
    """Feed the scaled gradient stream to an optimizer and record ||R_k||.

    For Adam, ``init="steady"`` starts the moments at the fixed point of the
    first segment (m = g0, v = g0^2), so the pre-jump norm sits exactly at
    its steady value; ``init="zero"`` starts from m = v = 0.  signSGD and GD
    are stateless and ignore the init mode.
    """
    starts = sorted(k for k, _ in exp.schedule)
    if len(set(starts)) != len(starts):
        raise DomainError("schedule has two segments starting at the same step")
    boundaries = [0] + starts + [steps]
    if any(b - a < 1 for a, b in zip(boundaries[:-1], boundaries[1:])):
        raise DomainError("every schedule segment must cover at least one step")

    base = np.asarray(exp.base, dtype=float)
    g0 = base * exp.multiplier_at(0)
    if init == "steady":
        state = MomentState(m=g0.copy(), v=g0 * g0, theta=np.zeros_like(base), k=0)
    elif init == "zero":
        state = MomentState(m=np.zeros_like(base), v=np.zeros_like(base),
                            theta=np.zeros_like(base), k=0)
    else:
        raise DomainError(f"unknown init mode {init!r}")

    mults = np.array([exp.multiplier_at(k) for k in range(steps)])
    norm_r = np.empty(steps)
    for k in range(steps):
        g = base * mults[k]
        if method == "adam":
            state, upd = adam_step(state, g, config)
        elif method == "signsgd":
            upd = signsgd_step(g)
        elif method == "gd":
            upd = gd_step(g)
        else:
            raise DomainError(f"unknown optimizer id {method!r}")
        norm_r[k] = upd.norm(2)
    return StepTrace(steps=np.arange(steps), multiplier=mults, norm_r=norm_r,
                     beta1=config.beta1, beta2=config.beta2)


def step_scale_grid(exp: StepScaleExperiment, steps: int, eta: float = 1e-3,
                    epsilon: float = 0.0, init: str = "steady") -> dict[tuple[float, float], StepTrace]:
    """Run the experiment for every (beta1, beta2) pair in the grid."""
    traces = {}
    for b1, b2 in exp.beta_grid:
        cfg = OptimizerConfig(beta1=b1, beta2=b2, eta=eta, epsilon=epsilon,
                              bias_correction=False)
        traces[(b1, b2)] = run_step_scale_experiment(exp, cfg, steps, init=init)
    return traces
