"""Full quality-prediction network.

Pipeline: backbone (patch tokens, multi-layer capture, channel reduction)
-> per stage: channel attention blocks then one windowed spatial block
-> pointwise transition between stages -> dual-branch head -> weighted mean.
Module toggles swap disabled blocks for the identity (their parameters are
simply not constructed), which is what the ablation sweeps rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import Backbone
from .config import ModelConfig
from .errors import DimensionError
from .head import DualBranchHead, PatchPrediction, aggregate_tensors
from .module import Linear, Module
from .sstb import ScaleSwinBlock
from .tab import TransposedAttentionBlock
from .tensor import Tensor, reshape, transpose


@dataclass
class NetworkOutput:
    score: Tensor  # scalar
    patch_scores: Tensor  # (N,)
    patch_weights: Tensor  # (N,)

    def prediction(self, grid_h: int, grid_w: int) -> PatchPrediction:
        return PatchPrediction(
            scores=self.patch_scores.data.copy(),
            weights=self.patch_weights.data.copy(),
            final=self.score.item(),
            grid_h=grid_h,
            grid_w=grid_w,
        )


class QualityNet(Module):
    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        config.validate()
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6D6F64]))
        self.backbone = self.add_child("backbone", Backbone(rng, config))

        dims = config.stage_dims
        self.tab_stages: list[list[TransposedAttentionBlock]] = []
        self.sstb_stages: list[ScaleSwinBlock | None] = []
        self.transitions: list[Linear] = []
        for s, dim in enumerate(dims, start=1):
            tabs: list[TransposedAttentionBlock] = []
            if config.enable_tab:
                for i in range(config.tab_per_stage):
                    tab = TransposedAttentionBlock(rng, dim, config.tab_temperature)
                    self.add_child(f"tab.{s}.{i}", tab)
                    tabs.append(tab)
            self.tab_stages.append(tabs)
            if config.enable_sstb:
                sstb = ScaleSwinBlock(
                    rng,
                    dim,
                    config.heads,
                    config.window_size,
                    config.mlp_hidden,
                    config.scale,
                    config.relative_bias,
                )
                self.add_child(f"sstb.{s}", sstb)
                self.sstb_stages.append(sstb)
            else:
                self.sstb_stages.append(None)
            if s < len(dims):
                tr = Linear(rng, dim, dims[s])
                self.add_child(f"transition.{s}", tr)
                self.transitions.append(tr)

        self.head = self.add_child("head", DualBranchHead(rng, dims[-1], config.enable_dual_branch))

    def forward(self, image: Tensor) -> NetworkOutput:
        """Score one (3, image_size, image_size) image in [0, 1]."""
        cfg = self.config
        g = cfg.grid_size
        fmap = self.backbone(image)  # (D1, N) channel-major
        x = fmap.values
        for s, tabs in enumerate(self.tab_stages):
            for tab in tabs:
                x = tab(x)
            sstb = self.sstb_stages[s]
            if sstb is not None:
                grid = reshape(transpose(x), (g, g, x.shape[0]))
                grid = sstb(grid)
                x = transpose(reshape(grid, (g * g, grid.shape[2])))
            if s < len(self.transitions):
                x = transpose(self.transitions[s](transpose(x)))
        tokens = transpose(x)  # (N, C_last)
        scores, weights = self.head(tokens)
        final = aggregate_tensors(scores, weights)
        return NetworkOutput(score=final, patch_scores=scores, patch_weights=weights)

    def predict_array(self, image: np.ndarray) -> PatchPrediction:
        """Inference on a raw (3, H, W) array; no gradients are kept."""
        out = self.forward(Tensor(image))
        return out.prediction(self.config.grid_size, self.config.grid_size)

    def parameter_dict(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def load_parameter_values(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameter_dict()
        missing = set(params) - set(values)
        extra = set(values) - set(params)
        if missing or extra:
            raise DimensionError(
                f"parameter names do not match the architecture: missing {sorted(missing)[:4]}, "
                f"unexpected {sorted(extra)[:4]}"
            )
        for name, p in params.items():
            arr = np.asarray(values[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise DimensionError(f"parameter {name}: shape {arr.shape} != expected {p.shape}")
            p.data = arr
