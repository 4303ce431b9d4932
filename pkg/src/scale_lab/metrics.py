"""Oscillation metrics and the diagonal-selection significance test.

The update-norm series is smoothed with an exponential moving average
(alpha = 2 / (window + 1), seeded at the first sample, so window 1 is the
identity) and summarized by

    omega1 = mean |x_{k+1} - x_k|            (first differences)
    omega2 = mean |x_{k+1} - 2 x_k + x_{k-1}|  (second differences)

both normalized over T - 1 terms; omega2 fills its leftmost slot, which has
no centered stencil, by reusing the first interior difference one-sidedly.

Whether the smoothest column of a (beta1, beta2) grid sits on the diagonal
is scored per (row, seed) and tested against a Binomial(N, 1/3) null with an
exact one-sided tail computed in integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SmoothedSeries:
    """An EMA-smoothed series along with its window and coefficient."""

    values: np.ndarray
    window: int
    alpha: float


def ema_smooth(series: Sequence[float], window: int) -> SmoothedSeries:
    """EMA with alpha = 2/(window+1), s_0 = x_0; window 1 returns the input bit-exactly."""
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise DomainError("cannot smooth an empty series")
    alpha = 2.0 / (window + 1)
    if window == 1:
        return SmoothedSeries(values=x.copy(), window=1, alpha=1.0)
    out = np.empty_like(x)
    out[0] = x[0]
    for k in range(1, x.size):
        out[k] = alpha * x[k] + (1.0 - alpha) * out[k - 1]
    return SmoothedSeries(values=out, window=window, alpha=alpha)


def _values(series) -> np.ndarray:
    if isinstance(series, SmoothedSeries):
        return series.values
    return np.asarray(series, dtype=float)


def oscillation_omega1(series) -> float:
    """Mean absolute first difference."""
    x = _values(series)
    if x.size < 2:
        raise DomainError(f"omega1 needs at least 2 samples, got {x.size}")
    return float(np.mean(np.abs(np.diff(x))))


def oscillation_omega2(series) -> float:
    """Mean absolute second difference over T-1 slots (left slot one-sided)."""
    x = _values(series)
    if x.size < 3:
        raise DomainError(f"omega2 needs at least 3 samples, got {x.size}")
    interior = np.abs(x[2:] - 2.0 * x[1:-1] + x[:-2])
    terms = np.concatenate([[interior[0]], interior])
    return float(np.sum(terms) / (x.size - 1))


def binomial_diagonal_test(k: int, n: int) -> float:
    """Exact one-sided tail P(X >= k) for X ~ Binomial(n, 1/3).

    Computed from integer binomial coefficients: the tail equals
    sum_{j >= k} C(n, j) 2^(n-j) divided by 3^n.
    """
    if n < 1:
        raise DomainError(f"binomial test needs n >= 1, got {n}")
    if not 0 <= k <= n:
        raise DomainError(f"k must lie in [0, {n}], got {k}")
    numerator = sum(math.comb(n, j) * 2 ** (n - j) for j in range(k, n + 1))
    return numerator / 3 ** n


@dataclass(frozen=True)
class OscillationGridReport:
    """Diagonal-selection statistics of per-seed oscillation grids."""

    omega: list[np.ndarray]      # one (n x n) matrix per seed; rows fix beta1
    beta_axis: list[float]
    hits: int                    # K: rows whose argmin column equals the row
    trials: int                  # N: rows x seeds
    rate: float
    p_value: float
    argmin_cols: list[list[int]]            # per seed, per row
    degenerate_rows: list[tuple[int, int]]  # (seed, row) with an all-equal row


def grid_report(omega_grids: Sequence[np.ndarray], beta_axis: Sequence[float]) -> OscillationGridReport:
    """Score diagonal selection over (row, seed) pairs and attach the exact test.

    NaN entries are treated as +inf in the argmin (a diverged run never wins);
    ties resolve to the lowest column index.  Rows whose entries are all equal
    are flagged as degenerate but still scored by the tie rule.
    """
    grids = [np.asarray(g, dtype=float) for g in omega_grids]
    if not grids:
        raise DomainError("empty grid list")
    axis = [float(b) for b in beta_axis]
    n = len(axis)
    for g in grids:
        if g.shape != (n, n):
            raise DomainError(f"grid shape {g.shape} does not match axis length {n}")

    hits = 0
    argmins: list[list[int]] = []
    degenerate: list[tuple[int, int]] = []
    for s, g in enumerate(grids):
        cols = []
        for row in range(n):
            vals = np.where(np.isnan(g[row]), np.inf, g[row])
            col = int(np.argmin(vals))  # argmin takes the first minimum on ties
            cols.append(col)
            if col == row:
                hits += 1
            if np.all(vals == vals[0]):
                degenerate.append((s, row))
        argmins.append(cols)

    trials = n * len(grids)
    return OscillationGridReport(
        omega=grids, beta_axis=axis, hits=hits, trials=trials,
        rate=hits / trials, p_value=binomial_diagonal_test(hits, trials),
        argmin_cols=argmins, degenerate_rows=degenerate,
    )


def combine_reports(reports: Sequence[OscillationGridReport]) -> tuple[int, int, float]:
    """Pool diagonal hits across independent reports: (K, N, p)."""
    k = sum(r.hits for r in reports)
    n = sum(r.trials for r in reports)
    return k, n, binomial_diagonal_test(k, n)
