"""patchiq: patch-weighted no-reference image quality assessment.

A self-contained differentiable tensor core (reverse-mode tape over float64
numpy arrays) drives a small ViT-style feature extractor, channel-transposed
attention blocks, shifted-window attention blocks with a scaled residual,
and a dual-branch patch-weighted score head, together with a seeded
train/evaluate/visualize harness and rank-correlation metrics.
"""

__version__ = "0.1.0"

from .config import ModelConfig, TrainConfig
from .errors import PatchIQError
from .head import PatchPrediction, aggregate
from .metrics import plcc, rank, srocc
from .network import QualityNet
from .optim import AdamState, LrSchedule, adam_step, cosine_lr
from .tensor import Tensor

__all__ = [
    "AdamState",
    "LrSchedule",
    "ModelConfig",
    "PatchIQError",
    "PatchPrediction",
    "QualityNet",
    "Tensor",
    "TrainConfig",
    "adam_step",
    "aggregate",
    "cosine_lr",
    "plcc",
    "rank",
    "srocc",
    "__version__",
]
