"""Windowed spatial attention: shifted-window transformer layers with a
convolution and a scaled residual around the pair.

The grid of tokens is tiled into non-overlapping windows; attention runs
independently inside each window. The second layer of each block shifts the
tiling by half a window with a toroidal roll and masks attention so tokens
that wrapped around the border never mix with tokens they are not actually
adjacent to. Partition/reverse and shift/unshift are exact inverses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DimensionError, ParameterError
from .module import LayerNorm, Linear, Module, uniform_init
from .tensor import (
    Tensor,
    add,
    bmm,
    conv2d,
    gelu,
    mul,
    reshape,
    roll,
    softmax,
    take_rows,
    transpose,
)


@dataclass
class WindowGrid:
    """Windows stacked as (num_windows, window_size**2, C), row-major window order."""

    windows: Tensor
    grid_h: int
    grid_w: int
    win: int
    shift: int = 0


def window_partition(grid: Tensor, win: int) -> WindowGrid:
    """Tile an (h, w, C) grid into non-overlapping win x win token groups."""
    if grid.ndim != 3:
        raise DimensionError(f"window_partition expects an (h, w, C) tensor, got {grid.shape}")
    h, w, c = grid.shape
    if win <= 0 or h % win != 0 or w % win != 0:
        raise ConfigError(f"grid {h}x{w} is not divisible into {win}x{win} windows")
    nh, nw = h // win, w // win
    x = reshape(grid, (nh, win, nw, win, c))
    x = transpose(x, (0, 2, 1, 3, 4))
    return WindowGrid(reshape(x, (nh * nw, win * win, c)), h, w, win)


def window_reverse(wg: WindowGrid) -> Tensor:
    """Exact inverse of window_partition."""
    nh, nw = wg.grid_h // wg.win, wg.grid_w // wg.win
    c = wg.windows.shape[-1]
    x = reshape(wg.windows, (nh, nw, wg.win, wg.win, c))
    x = transpose(x, (0, 2, 1, 3, 4))
    return reshape(x, (wg.grid_h, wg.grid_w, c))


def cyclic_shift(grid: Tensor, offset: int, reverse: bool = False) -> Tensor:
    """Toroidal roll of an (h, w, C) grid by (-offset, -offset); reverse undoes it."""
    h, w, _ = grid.shape
    if not 0 <= offset < min(h, w):
        raise ParameterError(f"shift offset {offset} out of range for {h}x{w} grid")
    if offset == 0:
        return grid
    s = offset if reverse else -offset
    return roll(grid, (s, s), axes=(0, 1))


@lru_cache(maxsize=64)
def shifted_attention_mask(h: int, w: int, win: int, shift: int) -> np.ndarray:
    """Additive (-inf) logit mask isolating wrap-around groups per window.

    Returns (num_windows, win*win, win*win), read-only.
    """
    img = np.zeros((h, w))
    cnt = 0
    for hs in (slice(0, h - win), slice(h - win, h - shift), slice(h - shift, h)):
        for ws in (slice(0, w - win), slice(w - win, w - shift), slice(w - shift, w)):
            img[hs, ws] = cnt
            cnt += 1
    nh, nw = h // win, w // win
    groups = img.reshape(nh, win, nw, win).transpose(0, 2, 1, 3).reshape(nh * nw, win * win)
    mask = np.where(groups[:, :, None] == groups[:, None, :], 0.0, -np.inf)
    mask.flags.writeable = False
    return mask


@lru_cache(maxsize=16)
def relative_index(win: int) -> np.ndarray:
    """Flat index into the (2*win-1)**2 relative-position table for each token pair."""
    coords = np.stack(np.meshgrid(np.arange(win), np.arange(win), indexing="ij"), axis=0)
    flat = coords.reshape(2, -1)
    rel = flat[:, :, None] - flat[:, None, :]  # (2, T, T)
    rel = rel + (win - 1)
    idx = rel[0] * (2 * win - 1) + rel[1]
    idx.flags.writeable = False
    return idx


class WindowAttention(Module):
    """Multi-head attention applied independently inside each window."""

    def __init__(self, rng: np.random.Generator, dim: int, heads: int, win: int, relative_bias: bool):
        super().__init__()
        if dim % heads != 0:
            raise ConfigError(f"channels {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.win = win
        self.q = self.add_child("q", Linear(rng, dim, dim))
        self.k = self.add_child("k", Linear(rng, dim, dim))
        self.v = self.add_child("v", Linear(rng, dim, dim))
        self.proj = self.add_child("proj", Linear(rng, dim, dim))
        self.rel_table: Tensor | None = None
        if relative_bias:
            self.rel_table = self.add_param("rel_table", np.zeros(((2 * win - 1) ** 2, heads)))

    def __call__(self, wg: WindowGrid, mask: np.ndarray | None = None) -> WindowGrid:
        out, _ = self.forward_with_attention(wg, mask)
        return out

    def forward_with_attention(
        self, wg: WindowGrid, mask: np.ndarray | None = None
    ) -> tuple[WindowGrid, np.ndarray]:
        nw, t, c = wg.windows.shape
        if c != self.dim:
            raise ConfigError(f"window channels {c} do not match attention dim {self.dim}")
        dh = c // self.heads
        scale = 1.0 / np.sqrt(dh)

        def split_heads(x: Tensor) -> Tensor:
            return transpose(reshape(x, (nw, t, self.heads, dh)), (0, 2, 1, 3))  # (nw, H, T, dh)

        q = split_heads(self.q(wg.windows))
        k = split_heads(self.k(wg.windows))
        v = split_heads(self.v(wg.windows))
        logits = mul(bmm(q, transpose(k, (0, 1, 3, 2))), Tensor(scale))  # (nw, H, T, T)
        if self.rel_table is not None:
            idx = relative_index(self.win).reshape(-1)
            bias = reshape(take_rows(self.rel_table, idx), (t, t, self.heads))
            logits = add(logits, transpose(bias, (2, 0, 1)))  # broadcast over windows
        if mask is not None:
            logits = add(logits, Tensor(mask[:, None, :, :]))
        attn = softmax(logits, axis=3)
        mixed = bmm(attn, v)  # (nw, H, T, dh)
        merged = reshape(transpose(mixed, (0, 2, 1, 3)), (nw, t, c))
        return WindowGrid(self.proj(merged), wg.grid_h, wg.grid_w, wg.win, wg.shift), attn.data


class SwinLayer(Module):
    """Pre-norm block: LN -> (shifted-)window MSA -> residual, LN -> MLP -> residual."""

    def __init__(
        self,
        rng: np.random.Generator,
        dim: int,
        heads: int,
        win: int,
        mlp_hidden: int,
        shift: int,
        relative_bias: bool = False,
    ):
        super().__init__()
        self.win = win
        self.shift = shift
        self.ln1 = self.add_child("ln1", LayerNorm(dim))
        self.attn = self.add_child("attn", WindowAttention(rng, dim, heads, win, relative_bias))
        self.ln2 = self.add_child("ln2", LayerNorm(dim))
        self.fc1 = self.add_child("fc1", Linear(rng, dim, mlp_hidden))
        self.fc2 = self.add_child("fc2", Linear(rng, mlp_hidden, dim))

    def attention_output(self, grid: Tensor) -> tuple[Tensor, np.ndarray]:
        h, w, _ = grid.shape
        y = self.ln1(grid)
        mask = None
        if self.shift:
            y = cyclic_shift(y, self.shift)
            mask = shifted_attention_mask(h, w, self.win, self.shift)
        attended, weights = self.attn.forward_with_attention(window_partition(y, self.win), mask)
        y = window_reverse(attended)
        if self.shift:
            y = cyclic_shift(y, self.shift, reverse=True)
        return y, weights

    def __call__(self, grid: Tensor) -> Tensor:
        attn_out, _ = self.attention_output(grid)
        x = add(grid, attn_out)
        mlp = self.fc2(gelu(self.fc1(self.ln2(x))))
        return add(x, mlp)


def stl_forward(layer: SwinLayer, grid: Tensor) -> Tensor:
    return layer(grid)


class ScaleSwinBlock(Module):
    """Two window-attention layers, a 3x3 convolution, and a scaled residual.

    output = scale * conv(stl2(stl1(x))) + x; scale = 0 degenerates to the
    identity bit-exactly.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        dim: int,
        heads: int,
        win: int,
        mlp_hidden: int,
        scale: float,
        relative_bias: bool = False,
    ):
        super().__init__()
        self.dim = dim
        self.scale = float(scale)
        self.stl1 = self.add_child("0", SwinLayer(rng, dim, heads, win, mlp_hidden, shift=0, relative_bias=relative_bias))
        self.stl2 = self.add_child(
            "1", SwinLayer(rng, dim, heads, win, mlp_hidden, shift=win // 2, relative_bias=relative_bias)
        )
        fan_in = dim * 9
        self.conv_weight = self.add_param("conv.weight", uniform_init(rng, (dim, dim, 3, 3), fan_in))
        self.conv_bias = self.add_param("conv.bias", np.zeros(dim))

    def branch(self, grid: Tensor) -> Tensor:
        """The pre-scale branch: two layers plus the convolution."""
        h, w, c = grid.shape
        y = self.stl2(self.stl1(grid))
        img = reshape(transpose(y, (2, 0, 1)), (1, c, h, w))
        conv = conv2d(img, self.conv_weight, padding=1)
        conv = add(conv, reshape(self.conv_bias, (1, c, 1, 1)))
        return transpose(reshape(conv, (c, h, w)), (1, 2, 0))

    def __call__(self, grid: Tensor) -> Tensor:
        if grid.ndim != 3 or grid.shape[2] != self.dim:
            raise DimensionError(f"expected grid (h, w, {self.dim}), got {grid.shape}")
        return add(mul(self.branch(grid), Tensor(self.scale)), grid)


def sstb_forward(block: ScaleSwinBlock, grid: Tensor) -> Tensor:
    return block(grid)
