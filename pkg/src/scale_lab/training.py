"""Training runs over the momentum grid and their oscillation statistics.

The protocol: train each problem over the 3x3 grid
(beta1, beta2) in {0.9, 0.99, 0.999}^2, repeat across seeds, smooth the
||R_k|| series with a window-200 EMA, score the oscillation per cell, and
test how often each row's smoothest column lands on the diagonal.

Everything is deterministic given (problem, config, seed): minibatches come
from a counter-based stream, so reruns are bit-identical.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .metrics import OscillationGridReport, ema_smooth, grid_report, oscillation_omega1, oscillation_omega2
from .optimizers import MomentState, OptimizerConfig, adam_step, gd_step, signsgd_step
from .problems import Problem
from .rng import CounterRng

DEFAULT_BETA_AXIS = (0.9, 0.99, 0.999)
DEFAULT_WINDOW = 200
DEFAULT_BATCH = 32
DEFAULT_ETA = {"quadratic": 0.01, "logistic": 0.01, "mlp": 0.003}

_BATCH_STREAM = 2


@dataclass(frozen=True)
class RunTrace:
    """Per-step loss and update norm of one training run."""

    k: np.ndarray
    loss: np.ndarray
    norm_r: np.ndarray
    config: OptimizerConfig
    seed: int
    problem_kind: str
    method: str = "adam"
    steps_requested: int = 0
    diverged: bool = False


def run_training(problem: Problem, config: OptimizerConfig, seed: int, steps: int,
                 batch_size: int = DEFAULT_BATCH, method: str = "adam") -> RunTrace:
    """Train for ``steps`` iterations and record (loss, ||R_k||) per step.

    The loss is the full-data objective at the pre-step parameters; the
    gradient fed to the optimizer is the minibatch one (full-batch for the
    quadratic).  A non-finite loss or update truncates the trace and flags
    it as diverged instead of raising.
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    theta = problem.init_theta(seed)
    state = MomentState(m=np.zeros_like(theta), v=np.zeros_like(theta), theta=theta, k=0)
    batches = CounterRng(seed, stream=_BATCH_STREAM)

    losses = np.empty(steps)
    norms = np.empty(steps)
    diverged = False
    n_done = 0
    for k in range(steps):
        loss_k = problem.loss(state.theta)
        if not np.isfinite(loss_k):
            diverged = True
            break
        idx = None
        if problem.n_samples:
            idx = batches.integers(0, problem.n_samples, batch_size)
        g = problem.grad(state.theta, idx)
        if method == "adam":
            state, upd = adam_step(state, g, config)
        elif method == "gd":
            upd = gd_step(g)
            state = MomentState(state.m, state.v, state.theta - config.eta * upd.r, state.k + 1)
        elif method == "signsgd":
            upd = signsgd_step(g)
            state = MomentState(state.m, state.v, state.theta - config.eta * upd.r, state.k + 1)
        else:
            raise DomainError(f"unknown method {method!r}")
        norm_k = upd.norm(2)
        if not np.isfinite(norm_k):
            diverged = True
            break
        losses[k], norms[k] = loss_k, norm_k
        n_done = k + 1

    return RunTrace(k=np.arange(n_done), loss=losses[:n_done], norm_r=norms[:n_done],
                    config=config, seed=seed, problem_kind=problem.kind, method=method,
                    steps_requested=steps, diverged=diverged)


def omega_of_trace(trace: RunTrace, window: int = DEFAULT_WINDOW, metric: str = "omega1") -> float:
    """Oscillation of the smoothed update-norm series; NaN for diverged runs."""
    if trace.diverged or trace.norm_r.size < 3:
        return float("nan")
    smoothed = ema_smooth(trace.norm_r, window)
    if metric == "omega1":
        return oscillation_omega1(smoothed)
    if metric == "omega2":
        return oscillation_omega2(smoothed)
    raise DomainError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class SweepResult:
    """All traces of a grid sweep plus the diagonal-selection report."""

    report: OscillationGridReport
    traces: dict[tuple[float, float, int], RunTrace]
    window: int
    metric: str
    params: dict = field(default_factory=dict)


def sweep_grid(problem: Problem, beta_axis: Sequence[float] = DEFAULT_BETA_AXIS,
               seeds: Sequence[int] = (0, 1, 2), steps: int = 5000,
               batch_size: int = DEFAULT_BATCH, eta: float | None = None,
               epsilon: float = 1e-8, window: int = DEFAULT_WINDOW,
               metric: str = "omega1", threads: int = 1) -> SweepResult:
    """Run every (beta1, beta2, seed) cell and score diagonal selection."""
    axis = [float(b) for b in beta_axis]
    seed_list = [int(s) for s in seeds]
    if not axis or not seed_list:
        raise DomainError("beta axis and seed list must be nonempty")
    if eta is None:
        eta = DEFAULT_ETA.get(problem.kind, 0.01)

    cells = [(b1, b2, s) for s in seed_list for b1 in axis for b2 in axis]

    def run_cell(cell):
        b1, b2, s = cell
        cfg = OptimizerConfig(beta1=b1, beta2=b2, eta=eta, epsilon=epsilon,
                              bias_correction=True)
        return cell, run_training(problem, cfg, seed=s, steps=steps, batch_size=batch_size)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run_cell, cells))
    else:
        results = dict(run_cell(c) for c in cells)

    grids = []
    for s in seed_list:
        grid = np.empty((len(axis), len(axis)))
        for i, b1 in enumerate(axis):
            for j, b2 in enumerate(axis):
                grid[i, j] = omega_of_trace(results[(b1, b2, s)], window, metric)
        grids.append(grid)

    report = grid_report(grids, axis)
    return SweepResult(report=report, traces=results, window=window, metric=metric,
                       params={"steps": steps, "batch_size": batch_size, "eta": eta,
                               "epsilon": epsilon, "problem": problem.kind,
                               "seeds": seed_list})
