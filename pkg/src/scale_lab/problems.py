"""Desk-scale trainable problems with exact gradients.

Three problems, all with analytically derived gradients so finite
differences can audit them:

* ``quadratic``: f(theta) = 0.5 theta' D theta with a fixed positive
  diagonal of condition number 100 in dimension 50 (deterministic,
  full-batch);
* ``logistic``: binary logistic regression on two seeded Gaussian blobs
  (20 features, 512 samples);
* ``mlp``: a 20 -> 16 tanh -> 2 softmax cross-entropy network on the same
  blobs, gradients by hand-written backprop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .rng import CounterRng

QUADRATIC_DIM = 50
QUADRATIC_CONDITION = 100.0
BLOB_SAMPLES = 512
BLOB_FEATURES = 20
MLP_HIDDEN = 16

_DATA_STREAM = 0
_INIT_STREAM = 1


@dataclass(frozen=True)
class Problem:
    """A differentiable training problem over a flat parameter vector."""

    kind: str
    dim_theta: int
    n_samples: int                      # 0 means full-batch only
    loss: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]
    init_theta: Callable[[int], np.ndarray]
    meta: dict = field(default_factory=dict)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _make_blobs(seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two overlapping Gaussian blobs, 256 samples per class."""
    rng = CounterRng(seed, stream=_DATA_STREAM)
    direction = rng.normal(BLOB_FEATURES)
    direction /= np.linalg.norm(direction)
    center = 1.0 * direction
    half = BLOB_SAMPLES // 2
    noise = rng.normal(BLOB_SAMPLES * BLOB_FEATURES).reshape(BLOB_SAMPLES, BLOB_FEATURES)
    x = np.vstack([noise[:half] - center, noise[half:] + center])
    y = np.concatenate([np.zeros(half, dtype=int), np.ones(half, dtype=int)])
    return x, y


def _quadratic(seed: int) -> Problem:
    exponents = np.linspace(0.0, 1.0, QUADRATIC_DIM)
    diag = QUADRATIC_CONDITION ** exponents  # eigenvalues from 1 to the condition number

    def loss(theta: np.ndarray) -> float:
        return 0.5 * float(theta @ (diag * theta))

    def grad(theta: np.ndarray, idx: np.ndarray | None = None) -> np.ndarray:
        return diag * theta

    def init_theta(init_seed: int) -> np.ndarray:
        rng = CounterRng(init_seed, stream=_INIT_STREAM)
        return rng.normal(QUADRATIC_DIM)

    return Problem(kind="quadratic", dim_theta=QUADRATIC_DIM, n_samples=0,
                   loss=loss, grad=grad, init_theta=init_theta,
                   meta={"condition": QUADRATIC_CONDITION, "seed": seed})


def _logistic(seed: int) -> Problem:
    x, y = _make_blobs(seed)
    dim = BLOB_FEATURES + 1  # weights + bias

    def _split(theta: np.ndarray):
        return theta[:-1], theta[-1]

    def loss(theta: np.ndarray) -> float:
        w, b = _split(theta)
        z = x @ w + b
        return float(np.mean(_softplus(z) - y * z))

    def grad(theta: np.ndarray, idx: np.ndarray | None = None) -> np.ndarray:
        xs, ys = (x, y) if idx is None else (x[idx], y[idx])
        w, b = _split(theta)
        err = _sigmoid(xs @ w + b) - ys
        g = np.empty(dim)
        g[:-1] = xs.T @ err / xs.shape[0]
        g[-1] = float(np.mean(err))
        return g

    def init_theta(init_seed: int) -> np.ndarray:
        rng = CounterRng(init_seed, stream=_INIT_STREAM)
        return 0.1 * rng.normal(dim)

    return Problem(kind="logistic", dim_theta=dim, n_samples=BLOB_SAMPLES,
                   loss=loss, grad=grad, init_theta=init_theta, meta={"seed": seed})


def _mlp(seed: int) -> Problem:
    x, y = _make_blobs(seed)
    h, c = MLP_HIDDEN, 2
    d = BLOB_FEATURES
    sizes = [d * h, h, h * c, c]
    dim = sum(sizes)

    def _unpack(theta: np.ndarray):
        a, b = 0, sizes[0]
        w1 = theta[a:b].reshape(d, h)
        a, b = b, b + sizes[1]
        b1 = theta[a:b]
        a, b = b, b + sizes[2]
        w2 = theta[a:b].reshape(h, c)
        b2 = theta[b:]
        return w1, b1, w2, b2

    def _forward(theta: np.ndarray, xs: np.ndarray):
        w1, b1, w2, b2 = _unpack(theta)
        hidden = np.tanh(xs @ w1 + b1)
        logits = hidden @ w2 + b2
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
        log_p = shifted - log_z
        return hidden, log_p

    def loss(theta: np.ndarray) -> float:
        _, log_p = _forward(theta, x)
        return float(-np.mean(log_p[np.arange(x.shape[0]), y]))

    def grad(theta: np.ndarray, idx: np.ndarray | None = None) -> np.ndarray:
        xs, ys = (x, y) if idx is None else (x[idx], y[idx])
        n = xs.shape[0]
        w1, b1, w2, b2 = _unpack(theta)
        hidden, log_p = _forward(theta, xs)
        dlogits = np.exp(log_p)
        dlogits[np.arange(n), ys] -= 1.0
        dlogits /= n
        dw2 = hidden.T @ dlogits
        db2 = dlogits.sum(axis=0)
        dhidden = (dlogits @ w2.T) * (1.0 - hidden * hidden)
        dw1 = xs.T @ dhidden
        db1 = dhidden.sum(axis=0)
        return np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])

    def init_theta(init_seed: int) -> np.ndarray:
        rng = CounterRng(init_seed, stream=_INIT_STREAM)
        w1 = rng.normal(d * h) / np.sqrt(d)
        b1 = np.zeros(h)
        w2 = rng.normal(h * c) / np.sqrt(h)
        b2 = np.zeros(c)
        return np.concatenate([w1, b1, w2, b2])

    return Problem(kind="mlp", dim_theta=dim, n_samples=BLOB_SAMPLES,
                   loss=loss, grad=grad, init_theta=init_theta, meta={"seed": seed})


_FACTORIES = {"quadratic": _quadratic, "logistic": _logistic, "mlp": _mlp}


def make_problem(kind: str, seed: int = 0) -> Problem:
    """Build a problem by kind; the seed fixes its synthetic dataset."""
    try:
        factory = _FACTORIES[kind]
    except KeyError:
        raise DomainError(f"unknown problem kind {kind!r}; expected one of {sorted(_FACTORIES)}")
    return factory(seed)
