"""Linear and rank correlation between predicted and ground-truth scores.

A constant sequence makes either correlation undefined; that raises
UndefinedCorrelationError instead of silently reporting 0, because silent
zeros corrupt evaluation tables.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, UndefinedCorrelationError


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DimensionError(f"expected equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DimensionError(f"correlation needs at least 2 points, got {x.size}")
    return x, y


def plcc(truth, predicted) -> float:
    """Pearson linear correlation coefficient."""
    x, y = _pair(truth, predicted)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt((dx * dx).sum())
    sy = np.sqrt((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError(
            "linear correlation undefined: at least one sequence is constant"
        )
    return float((dx * dy).sum() / (sx * sy))


def rank(values) -> np.ndarray:
    """Ascending fractional ranks (1-based); ties receive their mean position."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"rank expects a non-empty vector, got shape {v.shape}")
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        # positions i..j share the value; assign the mean of ranks i+1..j+1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srocc(truth, predicted) -> float:
    """Spearman rank-order correlation.

    Tie-free data uses the closed form 1 - 6*sum(d^2)/(n*(n^2-1)); with ties
    the closed form does not apply and the Pearson correlation of the
    fractional rank vectors is used instead.
    """
    x, y = _pair(truth, predicted)
    rx = rank(x)
    ry = rank(y)
    n = x.size
    tie_free = np.unique(x).size == n and np.unique(y).size == n
    if tie_free:
        d = rx - ry
        return float(1.0 - 6.0 * (d * d).sum() / (n * (n * n - 1)))
    if np.unique(rx).size == 1 or np.unique(ry).size == 1:
        raise UndefinedCorrelationError(
            "rank correlation undefined: at least one rank vector is constant"
        )
    return plcc(rx, ry)
