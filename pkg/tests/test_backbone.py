"""Patch embedding, encoder layers, multi-layer capture, channel reduction."""

import numpy as np
import pytest

from patchiq.backbone import Backbone, ChannelReduce, EncoderLayer, FeatureMap, PatchEmbed
from patchiq.config import ModelConfig
from patchiq.errors import ConfigError
from patchiq.gradcheck import grad_check
from patchiq.tensor import Tensor, transpose, tsum


def toy_config(**overrides):
    base = dict(
        patch_size=8, image_size=32, embed_dim=64, num_layers=6,
        extract_layers=(3, 4, 5, 6), heads=2, window_size=2,
        d1=64, d2=32, mlp_hidden=64,
    )
    base.update(overrides)
    return ModelConfig(**base).validate()


class TestPatchEmbed:
    def test_token_counts(self):
        embed = PatchEmbed(np.random.default_rng(0), toy_config())
        tokens = embed(Tensor(np.zeros((3, 32, 32))))
        assert tokens.shape == (16, 64)

    def test_paper_scale_token_count(self):
        cfg = ModelConfig(
            patch_size=8, image_size=224, embed_dim=8, num_layers=1,
            extract_layers=(1,), heads=2, window_size=4, d1=8, d2=8, mlp_hidden=8,
        ).validate()
        embed = PatchEmbed(np.random.default_rng(1), cfg)
        tokens = embed(Tensor(np.zeros((3, 224, 224))))
        assert tokens.shape == (784, 8)

    def test_zero_image_zero_bias_zero_pos_gives_zero_tokens(self):
        embed = PatchEmbed(np.random.default_rng(2), toy_config())
        # bias and positional embedding are zero-initialized by construction
        tokens = embed(Tensor(np.zeros((3, 32, 32))))
        assert np.array_equal(tokens.data, np.zeros((16, 64)))

    def test_wrong_image_size_rejected(self):
        embed = PatchEmbed(np.random.default_rng(3), toy_config())
        with pytest.raises(ConfigError):
            embed(Tensor(np.zeros((3, 40, 40))))

    def test_commutes_with_patch_permutation(self):
        rng = np.random.default_rng(4)
        embed = PatchEmbed(rng, toy_config())
        assert np.array_equal(embed.pos.data, np.zeros((16, 64)))
        image = rng.uniform(0, 1, (3, 32, 32))
        blocks = image.reshape(3, 4, 8, 4, 8).transpose(1, 3, 0, 2, 4).reshape(16, 3, 8, 8)
        perm = rng.permutation(16)
        permuted = blocks[perm].reshape(4, 4, 3, 8, 8).transpose(2, 0, 3, 1, 4).reshape(3, 32, 32)
        base = embed(Tensor(image)).data
        shuffled = embed(Tensor(permuted)).data
        assert np.array_equal(shuffled, base[perm])


class TestEncoderLayer:
    def test_zeroed_projections_identity(self):
        rng = np.random.default_rng(5)
        layer = EncoderLayer(rng, dim=16, heads=2, hidden=16)
        layer.proj.weight.data[:] = 0.0
        layer.proj.bias.data[:] = 0.0
        layer.fc2.weight.data[:] = 0.0
        layer.fc2.bias.data[:] = 0.0
        tokens = Tensor(rng.uniform(-1, 1, (9, 16)))
        assert np.array_equal(layer(tokens).data, tokens.data)

    def test_shape_contract(self):
        rng = np.random.default_rng(6)
        layer = EncoderLayer(rng, dim=64, heads=2, hidden=64)
        tokens = Tensor(rng.uniform(-1, 1, (16, 64)))
        assert layer(tokens).shape == (16, 64)

    def test_gradient_micro_instance(self):
        rng = np.random.default_rng(7)
        layer = EncoderLayer(rng, dim=4, heads=2, hidden=4)
        x = Tensor(rng.uniform(-1, 1, (4, 4)), requires_grad=True)
        inputs = {"x": x}
        inputs.update(dict(layer.named_parameters()))
        report = grad_check("encoder_layer", lambda t, *_: layer(t), inputs)
        assert report.passed, report.summary()


class TestExtractFeatures:
    def test_toy_channel_count(self):
        bb = Backbone(np.random.default_rng(8), toy_config())
        fmap = bb.extract_features(Tensor(np.random.default_rng(9).uniform(0, 1, (3, 32, 32))))
        assert fmap.channels == 256  # 4 captured layers x 64
        assert fmap.values.shape == (256, 16)

    def test_single_capture_degenerate(self):
        cfg = toy_config(extract_layers=(6,))
        bb = Backbone(np.random.default_rng(10), cfg)
        fmap = bb.extract_features(Tensor(np.zeros((3, 32, 32))))
        assert fmap.channels == 64

    def test_capture_index_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            toy_config(extract_layers=(3, 4, 5, 7))

    def test_channel_count_formula(self):
        for layers in ((1, 2), (2, 4, 6), (3, 4, 5, 6)):
            cfg = toy_config(extract_layers=layers)
            bb = Backbone(np.random.default_rng(11), cfg)
            fmap = bb.extract_features(Tensor(np.zeros((3, 32, 32))))
            assert fmap.channels == len(layers) * cfg.embed_dim


class TestChannelReduce:
    def test_identity_initialized_map_preserves_features(self):
        rng = np.random.default_rng(12)
        reduce = ChannelReduce(rng, channels=6, target=6)
        reduce.lin.weight.data = np.eye(6)
        reduce.lin.bias.data[:] = 0.0
        values = Tensor(rng.uniform(-1, 1, (6, 10)))
        fmap = FeatureMap(values=values, channels=6, grid_h=2, grid_w=5)
        out = reduce(fmap)
        assert np.array_equal(out.values.data, values.data)

    def test_shape_contract(self):
        rng = np.random.default_rng(13)
        reduce = ChannelReduce(rng, channels=256, target=64)
        fmap = FeatureMap(Tensor(rng.uniform(-1, 1, (256, 16))), 256, 4, 4)
        out = reduce(fmap)
        assert out.values.shape == (64, 16)
        assert (out.grid_h, out.grid_w) == (4, 4)

    def test_invalid_target(self):
        with pytest.raises(ConfigError):
            ChannelReduce(np.random.default_rng(14), channels=8, target=0)

    def test_gradient(self):
        rng = np.random.default_rng(15)
        reduce = ChannelReduce(rng, channels=4, target=2)
        x = Tensor(rng.uniform(-1, 1, (4, 5)), requires_grad=True)
        inputs = {"x": x}
        inputs.update(dict(reduce.named_parameters()))

        def fn(t, *_):
            return reduce(FeatureMap(t, 4, 1, 5)).values

        report = grad_check("reduce_channels", fn, inputs)
        assert report.passed, report.summary()


def test_end_to_end_gradient_reaches_patch_embedding():
    cfg = toy_config(num_layers=2, extract_layers=(1, 2))
    bb = Backbone(np.random.default_rng(16), cfg)
    image = Tensor(np.random.default_rng(17).uniform(0, 1, (3, 32, 32)))
    fmap = bb(image)
    tsum(fmap.values).backward()
    g = bb.embed.weight.grad
    assert g is not None and np.linalg.norm(g) > 0
