"""Discrete first-order optimizers exposing the update vector.

Adam maintains exponential moving averages of the gradient and its square,

    m' = b1 * m + (1 - b1) * g
    v' = b2 * v + (1 - b2) * g**2

and steps the parameters along the normalized update

    R = m_hat / (sqrt(v_hat) + eps),      theta' = theta - eta * R,

where (m_hat, v_hat) are the bias-corrected moments when enabled and the raw
ones otherwise.  R is returned separately from the parameter step because the
scale-sensitivity analysis operates on R alone.  signSGD and plain gradient
descent are included as the exactly scale-invariant and exactly scale-linear
reference updates.

All functions are pure: they never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters for the Adam family.

    ``weight_decay > 0`` enables AdamW-style decoupled decay: the parameters
    are shrunk multiplicatively after the Adam step.  ``epsilon = 0`` is the
    analysis mode; the caller must then keep v strictly positive.
    """

    beta1: float = 0.9
    beta2: float = 0.999
    eta: float = 1e-3
    epsilon: float = 1e-8
    bias_correction: bool = True
    weight_decay: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise DomainError(f"betas must lie in (0,1), got ({self.beta1}, {self.beta2})")
        if self.epsilon < 0.0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.weight_decay < 0.0:
            raise DomainError(f"weight_decay must be nonnegative, got {self.weight_decay}")


@dataclass(frozen=True)
class MomentState:
    """Per-coordinate optimizer state: moments, parameters, step counter."""

    m: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    k: int = 0

    def __post_init__(self):
        if not (self.m.shape == self.v.shape == self.theta.shape):
            raise DimensionError(
                f"m/v/theta shapes disagree: {self.m.shape}, {self.v.shape}, {self.theta.shape}"
            )


@dataclass(frozen=True)
class UpdateVector:
    """Unitless update direction R, same shape as the parameters."""

    r: np.ndarray

    def norm(self, ord: float | None = 2) -> float:
        return float(np.linalg.norm(self.r, ord))


def zero_state(dim: int, theta: np.ndarray | None = None) -> MomentState:
    """Fresh state with m = v = 0."""
    theta = np.zeros(dim) if theta is None else np.asarray(theta, dtype=float)
    return MomentState(m=np.zeros(dim), v=np.zeros(dim), theta=theta, k=0)


def adam_step(state: MomentState, g: np.ndarray, config: OptimizerConfig) -> tuple[MomentState, UpdateVector]:
    """One Adam step; returns the new state and the update vector R.

    Raises ``DimensionError`` on shape mismatch and ``DomainError`` when
    ``epsilon = 0`` meets a zero second-moment coordinate.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != state.m.shape:
        raise DimensionError(f"gradient shape {g.shape} != state shape {state.m.shape}")

    m = config.beta1 * state.m + (1.0 - config.beta1) * g
    v = config.beta2 * state.v + (1.0 - config.beta2) * g * g

    if config.bias_correction:
        m_hat = m / (1.0 - config.beta1 ** (state.k + 1))
        v_hat = v / (1.0 - config.beta2 ** (state.k + 1))
    else:
        m_hat, v_hat = m, v

    denom = np.sqrt(v_hat) + config.epsilon
    if config.epsilon == 0.0 and np.any(denom == 0.0):
        raise DomainError("epsilon = 0 with a zero second-moment coordinate")
    r = m_hat / denom

    theta = state.theta - config.eta * r
    if config.weight_decay > 0.0:
        theta = theta * (1.0 - config.eta * config.weight_decay)

    return MomentState(m=m, v=v, theta=theta, k=state.k + 1), UpdateVector(r)


def adam_update(state: MomentState, g: np.ndarray, config: OptimizerConfig) -> UpdateVector:
    """The update vector an Adam step would produce, without advancing state."""
    _, r = adam_step(state, g, config)
    return r


def signsgd_step(g: np.ndarray) -> UpdateVector:
    """Coordinate-wise sign update; sign(0) = 0."""
    return UpdateVector(np.sign(np.asarray(g, dtype=float)))


def gd_step(g: np.ndarray) -> UpdateVector:
    """Plain gradient descent: R = g."""
    return UpdateVector(np.asarray(g, dtype=float).copy())


def constant_gradient_closed_form(c: float | np.ndarray, k: int, beta1: float, beta2: float) -> UpdateVector:
    """R after ``k`` raw Adam steps from zero state under a constant gradient c.

    Geometric sums give m_k = (1 - b1**k) c and v_k = (1 - b2**k) c**2, hence

        R_k = sign(c) * (1 - b1**k) / sqrt(1 - b2**k),

    independent of |c|.  Serves as the oracle for the scale-independence of
    raw Adam from zero initialization.
    """
    if k < 1:
        raise DomainError(f"closed form needs k >= 1, got {k}")
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(c == 0.0):
        raise DomainError("closed form requires a nonzero constant gradient")
    magnitude = (1.0 - beta1 ** k) / np.sqrt(1.0 - beta2 ** k)
    return UpdateVector(np.sign(c) * magnitude)


def replace_theta(state: MomentState, theta: np.ndarray) -> MomentState:
    """State with parameters swapped out (moments and counter kept)."""
    return replace(state, theta=np.asarray(theta, dtype=float))
