"""Evaluation protocol and metric reports.

For each configured seed the manifest is split by reference group, every
test item is scored as the mean prediction over ``test_crops`` random crops,
and linear/rank correlations are computed against the raw labels. The mean
row across seeds is the arithmetic mean of the defined per-seed values.

An undefined correlation (constant predictions) is recorded on the affected
row instead of aborting or silently reporting zero. Wall-clock duration is
kept on the in-memory report and logged, but never written into report
files, so identical runs produce identical bytes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import Checkpoint
from .config import TrainConfig
from .data.augment import multi_crop
from .data.manifest import DatasetManifest, split
from .errors import UndefinedCorrelationError
from .metrics import plcc, srocc
from .network import QualityNet
from .seeding import STREAM_CROPS, rng_for
from .train import ImageSource


@dataclass
class ItemPrediction:
    id: str
    mos: float
    predicted: float


@dataclass
class SeedResult:
    seed: int
    plcc: float | None
    srocc: float | None
    items: list[ItemPrediction]
    error: str | None = None


@dataclass
class MetricReport:
    seed_results: list[SeedResult]
    mean_plcc: float | None
    mean_srocc: float | None
    test_crops: int
    config: dict
    duration_seconds: float = 0.0

    def to_dict(self) -> dict:
        # duration is deliberately excluded: report files must be
        # byte-identical across reruns with the same config and seeds
        return {
            "test_crops": self.test_crops,
            "config": self.config,
            "seeds": [
                {
                    "seed": r.seed,
                    "plcc": r.plcc,
                    "srocc": r.srocc,
                    "error": r.error,
                    "items": [
                        {"id": it.id, "mos": it.mos, "predicted": it.predicted} for it in r.items
                    ],
                }
                for r in self.seed_results
            ],
            "mean": {"plcc": self.mean_plcc, "srocc": self.mean_srocc},
        }


def predict_item(
    net: QualityNet,
    image: np.ndarray,
    test_crops: int,
    seed: int,
    crop_size: int,
    item_key: int = 0,
):
    """Mean score over seeded crops; also returns the first crop's patch maps."""
    rng = rng_for(seed, STREAM_CROPS, item_key)
    crops = multi_crop(image, test_crops, crop_size, rng)
    predictions = [net.predict_array(c) for c in crops]
    mean_score = float(np.mean([p.final for p in predictions]))
    return mean_score, predictions[0]


def evaluate(
    checkpoint: Checkpoint,
    manifest: DatasetManifest,
    source: ImageSource,
    config: TrainConfig | None = None,
) -> MetricReport:
    config = config or checkpoint.config
    config.validate()
    net = checkpoint.build_net()
    started = time.perf_counter()
    seed_results: list[SeedResult] = []
    for seed in config.seeds:
        _, test_manifest = split(manifest, config.split_ratio, seed)
        items: list[ItemPrediction] = []
        for idx, item in enumerate(sorted(test_manifest.items, key=lambda it: it.id)):
            image = source.load(item)
            score, _ = predict_item(net, image, config.test_crops, seed, config.crop_size, idx)
            items.append(
                ItemPrediction(id=item.id, mos=item.mos, predicted=manifest.denormalize(score))
            )
        truth = [it.mos for it in items]
        predicted = [it.predicted for it in items]
        try:
            p = plcc(truth, predicted)
            s = srocc(truth, predicted)
            seed_results.append(SeedResult(seed=seed, plcc=p, srocc=s, items=items))
        except UndefinedCorrelationError as exc:
            seed_results.append(
                SeedResult(seed=seed, plcc=None, srocc=None, items=items, error=str(exc))
            )
    mean_plcc = _mean_defined([r.plcc for r in seed_results])
    mean_srocc = _mean_defined([r.srocc for r in seed_results])
    duration = time.perf_counter() - started
    return MetricReport(
        seed_results=seed_results,
        mean_plcc=mean_plcc,
        mean_srocc=mean_srocc,
        test_crops=config.test_crops,
        config=config.to_dict(),
        duration_seconds=duration,
    )


def _mean_defined(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return float(np.mean(defined))
