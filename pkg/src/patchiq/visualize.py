"""Per-patch map export: weight, score, and weighted (final) maps.

Each map is an (image_size/P) x (image_size/P) grid written as ASCII PGM
(min-max normalized for display) with a JSON sidecar of the raw values, plus
a rendered figure. The final map is the elementwise product of weights and
scores before any normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint
from .data.augment import center_crop
from .data.imageio import write_pgm
from .errors import DataError
from .head import PatchPrediction


@dataclass
class MapFiles:
    weight_map: Path
    score_map: Path
    final_map: Path
    sidecar: Path
    figure: Path


def patch_maps(prediction: PatchPrediction) -> dict[str, np.ndarray]:
    g = (prediction.grid_h, prediction.grid_w)
    weights = prediction.weights.reshape(g)
    scores = prediction.scores.reshape(g)
    return {"weight": weights, "score": scores, "final": weights * scores}


def visualize(checkpoint: Checkpoint, image: np.ndarray, out_dir: str | Path) -> MapFiles:
    """Write the three map files, the raw-value sidecar, and a figure."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc

    net = checkpoint.build_net()
    size = checkpoint.config.model.image_size
    cropped = center_crop(image, size)
    prediction = net.predict_array(cropped)
    maps = patch_maps(prediction)

    files = MapFiles(
        weight_map=out / "weight_map.pgm",
        score_map=out / "score_map.pgm",
        final_map=out / "final_map.pgm",
        sidecar=out / "maps.json",
        figure=out / "maps.png",
    )
    write_pgm(files.weight_map, maps["weight"])
    write_pgm(files.score_map, maps["score"])
    write_pgm(files.final_map, maps["final"])
    sidecar = {
        "grid": [prediction.grid_h, prediction.grid_w],
        "weights": maps["weight"].reshape(-1).tolist(),
        "scores": maps["score"].reshape(-1).tolist(),
        "final": maps["final"].reshape(-1).tolist(),
        "aggregate_score": prediction.final,
    }
    files.sidecar.write_text(json.dumps(sidecar) + "\n")
    _render_figure(cropped, maps, files.figure)
    return files


def _render_figure(image: np.ndarray, maps: dict[str, np.ndarray], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 4, figsize=(12, 3.2))
    axes[0].imshow(image.transpose(1, 2, 0))
    axes[0].set_title("input")
    for ax, key in zip(axes[1:], ("weight", "score", "final")):
        im = ax.imshow(maps[key], cmap="viridis")
        ax.set_title(f"{key} map")
        fig.colorbar(im, ax=ax, fraction=0.046)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
