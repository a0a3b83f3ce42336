"""Dual-branch patch-weighted score head.

Each patch token is mapped to an unconstrained score and a sigmoid weight by
two independent two-layer branches; the image score is the weight-normalized
mean of the patch scores. Because the weights are strictly positive, the
final score is a convex combination of the patch scores and is invariant
under any positive rescaling of the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, EmptyInputError
from .module import Linear, Module
from .tensor import Tensor, div, gelu, mul, reshape, sigmoid, tmean, tsum

WEIGHT_SUM_GUARD = 1e-8


@dataclass
class PatchPrediction:
    """Per-patch scores and weights plus the aggregated image score."""

    scores: np.ndarray
    weights: np.ndarray
    final: float
    grid_h: int
    grid_w: int


class Branch(Module):
    def __init__(self, rng: np.random.Generator, channels: int):
        super().__init__()
        hidden = channels // 2
        if hidden < 1:
            raise ConfigError(f"head needs at least 2 channels, got {channels}")
        self.fc1 = self.add_child("fc1", Linear(rng, channels, hidden))
        self.fc2 = self.add_child("fc2", Linear(rng, hidden, 1))

    def __call__(self, tokens: Tensor) -> Tensor:
        n = tokens.shape[0]
        return reshape(self.fc2(gelu(self.fc1(tokens))), (n,))


class DualBranchHead(Module):
    """Independent scoring and weighting branches over (N, C) tokens.

    With ``dual`` False the weighting branch is absent and every patch
    weight is exactly 1, so aggregation degenerates to a plain mean.
    """

    def __init__(self, rng: np.random.Generator, channels: int, dual: bool = True):
        super().__init__()
        self.dual = dual
        self.scoring = self.add_child("scoring", Branch(rng, channels))
        self.weighting: Branch | None = None
        if dual:
            self.weighting = self.add_child("weighting", Branch(rng, channels))

    def __call__(self, tokens: Tensor) -> tuple[Tensor, Tensor]:
        if tokens.ndim != 2:
            raise DimensionError(f"head expects (N, C) tokens, got {tokens.shape}")
        if tokens.shape[0] == 0:
            raise EmptyInputError("head received zero patches")
        scores = self.scoring(tokens)
        if self.weighting is None:
            weights = Tensor(np.ones(tokens.shape[0]))
        else:
            weights = sigmoid(self.weighting(tokens))
        return scores, weights


def aggregate_tensors(scores: Tensor, weights: Tensor) -> Tensor:
    """Differentiable weighted mean with the degenerate-weight guard."""
    if scores.shape != weights.shape:
        raise DimensionError(f"score/weight lengths differ: {scores.shape} vs {weights.shape}")
    total = tsum(weights)
    if total.data <= WEIGHT_SUM_GUARD:
        return tmean(scores)
    return div(tsum(mul(weights, scores)), total)


def aggregate(scores, weights) -> float:
    """Weighted mean of patch scores: sum(w*s) / sum(w).

    When the weights sum to at most 1e-8 the guard engages and the plain
    mean of the scores is returned instead of a near-zero division.
    """
    s = np.asarray(scores, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if s.shape != w.shape or s.ndim != 1:
        raise DimensionError(f"aggregate expects equal-length vectors, got {s.shape} and {w.shape}")
    if s.size == 0:
        raise EmptyInputError("aggregate requires at least one patch")
    total = w.sum()
    if total <= WEIGHT_SUM_GUARD:
        return float(s.mean())
    return float((w * s).sum() / total)
