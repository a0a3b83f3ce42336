"""Procedural distortion dataset.

Base patterns (low-pass noise fields, gradients, checkerboards, each mixed
with a fine texture layer) are distorted at controlled severities; the label
is 1 - severity plus a small uniform jitter, clamped to [0, 1], so quality
ordering is known by construction. The texture layer matters: every
distortion type must visibly alter every base (blurring an already-smooth
field barely changes it, which makes its label unlearnable). Everything is
a pure function of the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..errors import ConfigError, DataError
from ..seeding import STREAM_SYNTH, rng_for
from .imageio import write_ppm
from .manifest import DatasetItem, DatasetManifest, build_manifest, save_manifest

DISTORTIONS = ("gaussian_blur", "additive_noise", "contrast_reduction", "block_artifact")
LABEL_JITTER = 0.02


@dataclass
class SynthConfig:
    num_refs: int = 8
    per_ref: int = 12
    image_size: int = 32
    seed: int = 0
    distortions: tuple[str, ...] = DISTORTIONS

    def validate(self) -> "SynthConfig":
        if self.num_refs < 1 or self.per_ref < 1 or self.image_size < 8:
            raise ConfigError("num_refs/per_ref must be >= 1 and image_size >= 8")
        if not self.distortions:
            raise ConfigError("at least one distortion type must be enabled")
        unknown = set(self.distortions) - set(DISTORTIONS)
        if unknown:
            raise ConfigError(f"unknown distortion types: {sorted(unknown)}")
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        if "distortions" in raw:
            raw = dict(raw)
            raw["distortions"] = tuple(raw["distortions"])
        return cls(**raw).validate()


@dataclass
class SyntheticDataset:
    manifest: DatasetManifest
    images: dict[str, np.ndarray] = field(default_factory=dict)


TEXTURE_SHARE = 0.4


def _lowpass_field(rng: np.random.Generator, size: int) -> np.ndarray:
    img = rng.uniform(0.0, 1.0, size=(3, size, size))
    for axis in (1, 2):
        img = gaussian_filter1d(img, sigma=size / 16.0, axis=axis, mode="wrap")
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) if hi > lo else np.full_like(img, 0.5)


def _gradient(rng: np.random.Generator, size: int) -> np.ndarray:
    ramp = np.linspace(0.0, 1.0, size)
    angle = rng.uniform(0, 2 * np.pi)
    yy, xx = np.meshgrid(ramp, ramp, indexing="ij")
    base = np.cos(angle) * xx + np.sin(angle) * yy
    base = (base - base.min()) / (base.max() - base.min())
    colors = rng.uniform(0.1, 0.9, size=(3, 2))
    return colors[:, 0, None, None] + base[None] * (colors[:, 1, None, None] - colors[:, 0, None, None])


def _checkerboard(rng: np.random.Generator, size: int) -> np.ndarray:
    cell = int(rng.integers(3, max(4, size // 6)))
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    board = ((yy // cell + xx // cell) % 2).astype(np.float64)
    c0 = rng.uniform(0.0, 0.45, size=3)
    c1 = rng.uniform(0.55, 1.0, size=3)
    return c0[:, None, None] + board[None] * (c1 - c0)[:, None, None]


def _fine_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    freq = rng.uniform(0.9, 1.6)
    phase = rng.uniform(0, 2 * np.pi)
    stripes = 0.5 + 0.5 * np.sin(freq * np.pi * (xx + yy) + phase)
    grain = rng.uniform(0.0, 1.0, size=(3, size, size))
    return 0.5 * stripes[None] + 0.5 * grain


_PATTERNS = (_lowpass_field, _gradient, _checkerboard)


def base_image(rng: np.random.Generator, index: int, size: int) -> np.ndarray:
    """Structured pattern blended with fine texture, cycling pattern families."""
    smooth = _PATTERNS[index % len(_PATTERNS)](rng, size)
    texture = _fine_texture(rng, size)
    return np.clip((1.0 - TEXTURE_SHARE) * smooth + TEXTURE_SHARE * texture, 0.0, 1.0)


def apply_distortion(
    image: np.ndarray, kind: str, severity: float, rng: np.random.Generator
) -> np.ndarray:
    """Distort a [0, 1] RGB image; severity 0 is the identity for every kind."""
    if not 0.0 <= severity <= 1.0:
        raise DataError(f"severity must lie in [0, 1], got {severity}")
    if kind == "gaussian_blur":
        sigma = 3.0 * severity
        if sigma == 0.0:
            return image.copy()
        out = gaussian_filter1d(image, sigma=sigma, axis=1, mode="reflect")
        out = gaussian_filter1d(out, sigma=sigma, axis=2, mode="reflect")
        return np.clip(out, 0.0, 1.0)
    if kind == "additive_noise":
        noise = rng.normal(0.0, 0.3 * severity, size=image.shape)
        return np.clip(image + noise, 0.0, 1.0)
    if kind == "contrast_reduction":
        return 0.5 + (image - 0.5) * (1.0 - severity)
    if kind == "block_artifact":
        block = 8
        _, h, w = image.shape
        hb, wb = h // block, w // block
        trimmed = image[:, : hb * block, : wb * block]
        means = trimmed.reshape(3, hb, block, wb, block).mean(axis=(2, 4))
        levels = 16
        means = np.rint(means * (levels - 1)) / (levels - 1)
        blocky = image.copy()
        blocky[:, : hb * block, : wb * block] = np.repeat(np.repeat(means, block, axis=1), block, axis=2)
        return np.clip((1.0 - severity) * image + severity * blocky, 0.0, 1.0)
    raise DataError(f"unknown distortion type {kind!r}")


def synth_generate(config: SynthConfig) -> SyntheticDataset:
    """Deterministically generate the manifest and in-memory images."""
    config.validate()
    items: list[DatasetItem] = []
    images: dict[str, np.ndarray] = {}
    for r in range(config.num_refs):
        ref_rng = rng_for(config.seed, STREAM_SYNTH, r)
        base = base_image(ref_rng, r, config.image_size)
        for j in range(config.per_ref):
            severity = 0.0 if config.per_ref == 1 else j / (config.per_ref - 1)
            # cycle the enabled types so every reference covers all of them
            kind = config.distortions[j % len(config.distortions)]
            distorted = apply_distortion(base, kind, severity, ref_rng)
            mos = float(np.clip(1.0 - severity + ref_rng.uniform(-LABEL_JITTER, LABEL_JITTER), 0.0, 1.0))
            item_id = f"ref{r:02d}_{kind}_{j:02d}"
            items.append(DatasetItem(id=item_id, path=f"{item_id}.ppm", mos=mos, ref_group=f"ref{r:02d}"))
            images[item_id] = distorted
    manifest = build_manifest(items)
    return SyntheticDataset(manifest=manifest, images=images)


def export_dataset(dataset: SyntheticDataset, out_dir: str | Path) -> Path:
    """Write PPM files plus manifest.csv; paths in the CSV are relative to it."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for item in dataset.manifest.items:
        write_ppm(out / item.path, dataset.images[item.id])
    manifest_path = out / "manifest.csv"
    save_manifest(dataset.manifest, manifest_path)
    return manifest_path
