"""Trainable patch-token feature extractor.

A small ViT-style encoder: non-overlapping patches are flattened, linearly
projected, given a learned (zero-initialized) positional embedding, and run
through L pre-norm encoder layers. Outputs of a configured subset of layers
are concatenated channel-wise and reduced to the first stage width by a
pointwise linear map. There is no class token; every token corresponds to
one image patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ConfigError, DimensionError
from .module import LayerNorm, Linear, Module, uniform_init
from .tensor import Tensor, add, bmm, concat, gelu, linear, mul, reshape, softmax, transpose


@dataclass
class FeatureMap:
    """Channel-major token features over the patch grid."""

    values: Tensor  # (channels, h * w)
    channels: int
    grid_h: int
    grid_w: int

    @property
    def num_tokens(self) -> int:
        return self.grid_h * self.grid_w


class PatchEmbed(Module):
    def __init__(self, rng: np.random.Generator, config: ModelConfig):
        super().__init__()
        self.patch = config.patch_size
        self.image_size = config.image_size
        self.grid = config.grid_size
        in_dim = 3 * self.patch * self.patch
        self.weight = self.add_param("weight", uniform_init(rng, (in_dim, config.embed_dim), in_dim))
        self.bias = self.add_param("bias", np.zeros(config.embed_dim))
        # positional embedding is learned but starts at zero
        self.pos = self.add_param("pos", np.zeros((config.num_tokens, config.embed_dim)))

    def __call__(self, image: Tensor) -> Tensor:
        if image.ndim != 3 or image.shape[0] != 3:
            raise DimensionError(f"expected a (3, H, W) image, got {image.shape}")
        _, h, w = image.shape
        if h != self.image_size or w != self.image_size:
            raise ConfigError(
                f"image {h}x{w} does not match configured size {self.image_size} "
                f"(patch size {self.patch})"
            )
        p, g = self.patch, self.grid
        x = reshape(image, (3, g, p, g, p))
        x = transpose(x, (1, 3, 0, 2, 4))  # (gh, gw, 3, p, p)
        tokens = reshape(x, (g * g, 3 * p * p))
        return add(linear(tokens, self.weight, self.bias), self.pos)


def multi_head_attention(
    tokens: Tensor,
    q_lin: Linear,
    k_lin: Linear,
    v_lin: Linear,
    proj: Linear,
    heads: int,
) -> Tensor:
    """Full self-attention over a (N, C) token matrix, scale 1/sqrt(C/heads)."""
    n, c = tokens.shape
    if c % heads != 0:
        raise ConfigError(f"channels {c} not divisible by heads {heads}")
    dh = c // heads
    scale = 1.0 / np.sqrt(dh)

    def split_heads(t: Tensor) -> Tensor:
        return transpose(reshape(t, (n, heads, dh)), (1, 0, 2))  # (H, N, dh)

    q = split_heads(q_lin(tokens))
    k = split_heads(k_lin(tokens))
    v = split_heads(v_lin(tokens))
    logits = mul(bmm(q, transpose(k, (0, 2, 1))), Tensor(scale))
    attn = softmax(logits, axis=2)
    out = bmm(attn, v)  # (H, N, dh)
    merged = reshape(transpose(out, (1, 0, 2)), (n, c))
    return proj(merged)


class EncoderLayer(Module):
    """Pre-norm transformer block: LN -> MSA -> residual, LN -> MLP -> residual."""

    def __init__(self, rng: np.random.Generator, dim: int, heads: int, hidden: int):
        super().__init__()
        self.heads = heads
        self.ln1 = self.add_child("ln1", LayerNorm(dim))
        self.q = self.add_child("q", Linear(rng, dim, dim))
        self.k = self.add_child("k", Linear(rng, dim, dim))
        self.v = self.add_child("v", Linear(rng, dim, dim))
        self.proj = self.add_child("proj", Linear(rng, dim, dim))
        self.ln2 = self.add_child("ln2", LayerNorm(dim))
        self.fc1 = self.add_child("fc1", Linear(rng, dim, hidden))
        self.fc2 = self.add_child("fc2", Linear(rng, hidden, dim))

    def __call__(self, tokens: Tensor) -> Tensor:
        attn = multi_head_attention(self.ln1(tokens), self.q, self.k, self.v, self.proj, self.heads)
        x = tokens + attn
        h = self.fc2(gelu(self.fc1(self.ln2(x))))
        return x + h


class ChannelReduce(Module):
    """Pointwise (per-token) linear map over the channel axis."""

    def __init__(self, rng: np.random.Generator, channels: int, target: int):
        super().__init__()
        if target <= 0:
            raise ConfigError(f"reduction target must be positive, got {target}")
        self.target = target
        self.lin = self.add_child("lin", Linear(rng, channels, target))

    def __call__(self, fmap: FeatureMap) -> FeatureMap:
        tokens = transpose(fmap.values)  # (N, C)
        reduced = self.lin(tokens)
        return FeatureMap(
            values=transpose(reduced),
            channels=self.target,
            grid_h=fmap.grid_h,
            grid_w=fmap.grid_w,
        )


class Backbone(Module):
    def __init__(self, rng: np.random.Generator, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.embed = self.add_child("patch", PatchEmbed(rng, config))
        self.layers: list[EncoderLayer] = []
        for i in range(1, config.num_layers + 1):
            layer = EncoderLayer(rng, config.embed_dim, config.heads, config.embed_dim)
            self.layers.append(layer)
            self.add_child(f"layers.{i}", layer)
        self.extract_layers = tuple(config.extract_layers)
        concat_dim = len(self.extract_layers) * config.embed_dim
        self.reduce = self.add_child("reduce", ChannelReduce(rng, concat_dim, config.d1))

    def extract_features(self, image: Tensor) -> FeatureMap:
        """Run every encoder layer and concatenate the configured captures."""
        tokens = self.embed(image)
        captured: list[Tensor] = []
        wanted = set(self.extract_layers)
        for i, layer in enumerate(self.layers, start=1):
            tokens = layer(tokens)
            if i in wanted:
                captured.append(tokens)
        feats = concat(captured, axis=1) if len(captured) > 1 else captured[0]
        g = self.config.grid_size
        return FeatureMap(
            values=transpose(feats),
            channels=feats.shape[1],
            grid_h=g,
            grid_w=g,
        )

    def __call__(self, image: Tensor) -> FeatureMap:
        return self.reduce(self.extract_features(image))
