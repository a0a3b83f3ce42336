"""Channel-wise transposed attention block.

Self-attention runs across the channel dimension: queries, keys, and values
come from three independent per-token linear projections, and the logit
matrix is formed by contracting keys against queries over the spatial
positions, giving a C x C attention map whose rows sum to 1. The attended
values pass through an output projection and a residual add. There is no
layer normalization and no MLP in this block, and the attention map is
invariant under any spatial permutation of the tokens.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError
from .module import Linear, Module
from .tensor import Tensor, add, matmul, mul, softmax, transpose


class TransposedAttentionBlock(Module):
    """Maps (C, N) channel-major features to same-shape features.

    temperature_mode "sqrt" divides logits by sqrt(N); "linear" divides by N.
    """

    def __init__(self, rng: np.random.Generator, channels: int, temperature_mode: str = "sqrt"):
        super().__init__()
        self.channels = channels
        self.temperature_mode = temperature_mode
        self.q = self.add_child("q", Linear(rng, channels, channels))
        self.k = self.add_child("k", Linear(rng, channels, channels))
        self.v = self.add_child("v", Linear(rng, channels, channels))
        self.proj = self.add_child("proj", Linear(rng, channels, channels))

    def temperature(self, num_tokens: int) -> float:
        if self.temperature_mode == "linear":
            return float(num_tokens)
        return float(np.sqrt(num_tokens))

    def forward_with_attention(self, x: Tensor) -> tuple[Tensor, np.ndarray]:
        """Forward pass that also returns the C x C attention map (detached)."""
        c, n = x.shape
        if n == 0:
            raise EmptyInputError("transposed attention received zero tokens")
        tokens = transpose(x)  # (N, C): per-token channel vectors
        q = self.q(tokens)
        k = self.k(tokens)
        v = self.v(tokens)
        logits = mul(matmul(transpose(k), q), Tensor(1.0 / self.temperature(n)))  # (C, C)
        attn = softmax(logits, axis=1)
        mixed = matmul(attn, transpose(v))  # (C, N)
        out = transpose(self.proj(transpose(mixed)))
        return add(out, x), attn.data

    def __call__(self, x: Tensor) -> Tensor:
        out, _ = self.forward_with_attention(x)
        return out


def tab_forward(block: TransposedAttentionBlock, x: Tensor) -> Tensor:
    return block(x)
