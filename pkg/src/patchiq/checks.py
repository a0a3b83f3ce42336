"""Registry of finite-difference checks: every differentiable op plus the
composite blocks and the whole network on a micro configuration."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .config import ModelConfig
from .gradcheck import GradCheckReport, grad_check
from .head import DualBranchHead, aggregate_tensors
from .network import QualityNet
from .sstb import ScaleSwinBlock, SwinLayer
from .tab import TransposedAttentionBlock
from .tensor import (
    Tensor,
    add,
    bmm,
    concat,
    conv2d,
    div,
    gelu,
    layer_norm,
    linear,
    matmul,
    mse,
    mul,
    power,
    reshape,
    roll,
    sigmoid,
    softmax,
    take_rows,
    tmean,
    transpose,
    tsum,
)

MICRO_CONFIG = ModelConfig(
    patch_size=8,
    image_size=16,
    embed_dim=8,
    num_layers=2,
    extract_layers=(1, 2),
    heads=2,
    window_size=2,
    d1=8,
    d2=4,
    mlp_hidden=8,
    scale=0.1,
)


def _rand(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.uniform(-1.0, 1.0, size=shape), requires_grad=True)


def _block_inputs(x: Tensor, block) -> dict[str, Tensor]:
    inputs = {"x": x}
    inputs.update(dict(block.named_parameters()))
    return inputs


def _check_matmul() -> GradCheckReport:
    rng = np.random.default_rng(11)
    return grad_check("matmul", matmul, {"a": _rand(rng, 3, 4), "b": _rand(rng, 4, 2)})


def _check_bmm() -> GradCheckReport:
    rng = np.random.default_rng(12)
    return grad_check("bmm", bmm, {"a": _rand(rng, 2, 3, 4), "b": _rand(rng, 2, 4, 3)})


def _check_linear() -> GradCheckReport:
    rng = np.random.default_rng(13)
    return grad_check(
        "linear", linear, {"x": _rand(rng, 5, 4), "w": _rand(rng, 4, 3), "b": _rand(rng, 3)}
    )


def _check_softmax() -> GradCheckReport:
    rng = np.random.default_rng(14)
    return grad_check("softmax", lambda x: softmax(x, axis=1), {"x": _rand(rng, 3, 5)})


def _check_layer_norm() -> GradCheckReport:
    rng = np.random.default_rng(15)
    return grad_check(
        "layer_norm",
        lambda x, g, b: layer_norm(x, g, b, eps=1e-6),
        {"x": _rand(rng, 4, 6), "gamma": _rand(rng, 6), "beta": _rand(rng, 6)},
    )


def _check_gelu() -> GradCheckReport:
    rng = np.random.default_rng(16)
    return grad_check("gelu", gelu, {"x": _rand(rng, 4, 5)})


def _check_sigmoid() -> GradCheckReport:
    rng = np.random.default_rng(17)
    return grad_check("sigmoid", sigmoid, {"x": _rand(rng, 4, 5)})


def _check_conv2d() -> GradCheckReport:
    rng = np.random.default_rng(18)
    return grad_check(
        "conv2d",
        lambda x, k: conv2d(x, k, padding=1),
        {"x": _rand(rng, 1, 2, 5, 5), "k": _rand(rng, 3, 2, 3, 3)},
    )


def _check_elementwise() -> GradCheckReport:
    rng = np.random.default_rng(19)

    def fn(a, b, c):
        return div(add(mul(a, b), power(a, 2.0)), add(c, Tensor(3.0)))

    return grad_check(
        "elementwise", fn, {"a": _rand(rng, 4, 3), "b": _rand(rng, 4, 3), "c": _rand(rng, 4, 3)}
    )


def _check_reductions() -> GradCheckReport:
    rng = np.random.default_rng(20)

    def fn(a, b):
        stacked = concat([reshape(a, (2, 6)), transpose(b, (1, 0))], axis=0)
        rolled = roll(stacked, (1, 2), axes=(0, 1))
        return add(tsum(rolled, axis=1), tmean(stacked, axis=1))

    return grad_check("shape_ops", fn, {"a": _rand(rng, 3, 4), "b": _rand(rng, 6, 2)})


def _check_take_rows() -> GradCheckReport:
    rng = np.random.default_rng(21)
    idx = np.array([0, 2, 2, 5, 1])
    return grad_check("take_rows", lambda t: take_rows(t, idx), {"table": _rand(rng, 6, 3)})


def _check_mse() -> GradCheckReport:
    rng = np.random.default_rng(22)
    target = Tensor(rng.uniform(0, 1, size=6))
    return grad_check("mse", lambda p: mse(p, target), {"pred": _rand(rng, 6)})


def _check_tab() -> GradCheckReport:
    rng = np.random.default_rng(23)
    block = TransposedAttentionBlock(rng, channels=4)
    x = _rand(rng, 4, 3)
    return grad_check("tab_forward", lambda x_t, *_: block(x_t), _block_inputs(x, block))


def _check_stl(shift: int) -> GradCheckReport:
    rng = np.random.default_rng(24 + shift)
    layer = SwinLayer(rng, dim=4, heads=2, win=2, mlp_hidden=4, shift=shift)
    x = _rand(rng, 2, 2, 4)
    name = "stl_forward_shifted" if shift else "stl_forward"
    return grad_check(name, lambda x_t, *_: layer(x_t), _block_inputs(x, layer))


def _check_stl_relative_bias() -> GradCheckReport:
    rng = np.random.default_rng(26)
    layer = SwinLayer(rng, dim=4, heads=2, win=2, mlp_hidden=4, shift=0, relative_bias=True)
    layer.attn.rel_table.data = rng.uniform(-0.5, 0.5, size=layer.attn.rel_table.shape)
    x = _rand(rng, 2, 2, 4)
    return grad_check("stl_forward_relbias", lambda x_t, *_: layer(x_t), _block_inputs(x, layer))


def _check_sstb() -> GradCheckReport:
    rng = np.random.default_rng(27)
    block = ScaleSwinBlock(rng, dim=4, heads=2, win=2, mlp_hidden=4, scale=0.3)
    x = _rand(rng, 2, 2, 4)
    return grad_check("sstb_forward", lambda x_t, *_: block(x_t), _block_inputs(x, block))


def _check_head() -> GradCheckReport:
    rng = np.random.default_rng(28)
    head = DualBranchHead(rng, channels=4)
    x = _rand(rng, 5, 4)

    def fn(x_t, *_):
        scores, weights = head(x_t)
        return aggregate_tensors(scores, weights)

    return grad_check("head", fn, _block_inputs(x, head))


def _check_full_model() -> GradCheckReport:
    rng = np.random.default_rng(29)
    net = QualityNet(MICRO_CONFIG, seed=7)
    image = Tensor(rng.uniform(0.0, 1.0, size=(3, 16, 16)), requires_grad=True)
    inputs = {"image": image}
    inputs.update(net.parameter_dict())
    return grad_check(
        "full_model_16x16_p8",
        lambda img, *_: net.forward(img).score,
        inputs,
        max_coords=6,
        seed=5,
    )


CHECKS: dict[str, Callable[[], GradCheckReport]] = {
    "matmul": _check_matmul,
    "bmm": _check_bmm,
    "linear": _check_linear,
    "softmax": _check_softmax,
    "layer_norm": _check_layer_norm,
    "gelu": _check_gelu,
    "sigmoid": _check_sigmoid,
    "conv2d": _check_conv2d,
    "elementwise": _check_elementwise,
    "shape_ops": _check_reductions,
    "take_rows": _check_take_rows,
    "mse": _check_mse,
    "tab_forward": _check_tab,
    "stl_forward": lambda: _check_stl(0),
    "stl_forward_shifted": lambda: _check_stl(1),
    "stl_forward_relbias": _check_stl_relative_bias,
    "sstb_forward": _check_sstb,
    "head": _check_head,
    "full_model_16x16_p8": _check_full_model,
}


def run_all_checks() -> list[GradCheckReport]:
    return [builder() for builder in CHECKS.values()]
