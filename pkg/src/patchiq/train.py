"""Training loop: seeded shuffle, crop/flip augmentation, MSE on normalized
labels, Adam with decoupled weight decay, cosine-annealed learning rate.

Images come from an ImageSource so the same loop serves file-backed manifests
and in-memory synthetic datasets. Training respects the grouped split of the
first configured seed: the loop only ever sees the train side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .checkpoint import Checkpoint
from .config import TrainConfig
from .data.augment import random_crop_flip
from .data.imageio import read_image
from .data.manifest import DatasetItem, DatasetManifest, split
from .data.synth import SyntheticDataset
from .errors import NumericError
from .network import QualityNet
from .optim import Adam, cosine_lr
from .seeding import STREAM_AUGMENT, STREAM_SHUFFLE, rng_for
from .tensor import Tensor, mse, stack_scalars


class ImageSource(Protocol):
    def load(self, item: DatasetItem) -> np.ndarray: ...


@dataclass
class FileImageSource:
    """Resolves manifest paths relative to the manifest's directory."""

    root: Path
    _cache: dict[str, np.ndarray] = field(default_factory=dict)

    def load(self, item: DatasetItem) -> np.ndarray:
        if item.id not in self._cache:
            p = Path(item.path)
            if not p.is_absolute():
                p = self.root / p
            self._cache[item.id] = read_image(p)
        return self._cache[item.id]


@dataclass
class MemoryImageSource:
    images: dict[str, np.ndarray]

    def load(self, item: DatasetItem) -> np.ndarray:
        return self.images[item.id]


def source_for_manifest(manifest_path: str | Path) -> FileImageSource:
    return FileImageSource(root=Path(manifest_path).resolve().parent)


def source_for_synthetic(dataset: SyntheticDataset) -> MemoryImageSource:
    return MemoryImageSource(images=dataset.images)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    epoch_losses: list[float]
    learning_rates: list[float]


def train(
    config: TrainConfig,
    manifest: DatasetManifest,
    source: ImageSource,
    use_split: bool = True,
) -> TrainResult:
    """Train a fresh network; returns the checkpoint and per-epoch mean losses.

    With ``use_split`` the loop trains on the train side of the grouped split
    for seeds[0]; otherwise it trains on the whole manifest.
    """
    config.validate()
    seed = config.seeds[0]
    train_manifest = split(manifest, config.split_ratio, seed)[0] if use_split else manifest
    net = QualityNet(config.model, seed=seed)
    params = net.parameter_dict()
    optimizer = Adam(
        params,
        lr=config.lr,
        weight_decay=config.weight_decay,
    )

    items = list(train_manifest.items)
    epoch_losses: list[float] = []
    learning_rates: list[float] = []
    step = 0
    for epoch in range(config.epochs):
        lr = cosine_lr(config.lr_schedule, epoch)
        optimizer.lr = lr
        order = rng_for(seed, STREAM_SHUFFLE, epoch).permutation(len(items))
        batch_losses: list[float] = []
        for start in range(0, len(items), config.batch_size):
            batch = [items[i] for i in order[start : start + config.batch_size]]
            preds = []
            targets = []
            for k, item in enumerate(batch):
                rng = rng_for(seed, STREAM_AUGMENT, epoch, start + k)
                img = random_crop_flip(source.load(item), config.crop_size, config.flip_prob, rng)
                preds.append(net.forward(Tensor(img)).score)
                targets.append(manifest.normalize(item.mos))
            loss = mse(stack_scalars(preds), Tensor(np.asarray(targets)))
            loss_value = loss.item()
            if not np.isfinite(loss_value):
                raise NumericError(f"training diverged: non-finite loss at epoch {epoch}, step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(loss_value)
            step += 1
        epoch_losses.append(float(np.mean(batch_losses)) if batch_losses else float("nan"))
        learning_rates.append(lr)

    checkpoint = Checkpoint.from_net(net, config, step)
    return TrainResult(checkpoint=checkpoint, epoch_losses=epoch_losses, learning_rates=learning_rates)
