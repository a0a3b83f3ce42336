"""Seeded crop/flip augmentation and multi-crop test sampling."""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def random_crop_flip(
    image: np.ndarray, crop_size: int, flip_prob: float, rng: np.random.Generator
) -> np.ndarray:
    """Uniform-random crop plus horizontal flip with probability flip_prob."""
    _, h, w = image.shape
    if crop_size > h or crop_size > w:
        raise DataError(f"crop {crop_size} larger than image {h}x{w}")
    top = int(rng.integers(0, h - crop_size + 1))
    left = int(rng.integers(0, w - crop_size + 1))
    out = image[:, top : top + crop_size, left : left + crop_size]
    if rng.uniform() < flip_prob:
        out = out[:, :, ::-1]
    return np.ascontiguousarray(out)


def multi_crop(
    image: np.ndarray, n: int, crop_size: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """n independent uniform crops (no flips), deterministic per generator state."""
    _, h, w = image.shape
    if crop_size > h or crop_size > w:
        raise DataError(f"crop {crop_size} larger than image {h}x{w}")
    if n < 1:
        raise DataError(f"crop count must be >= 1, got {n}")
    crops = []
    for _ in range(n):
        top = int(rng.integers(0, h - crop_size + 1))
        left = int(rng.integers(0, w - crop_size + 1))
        crops.append(np.ascontiguousarray(image[:, top : top + crop_size, left : left + crop_size]))
    return crops


def center_crop(image: np.ndarray, crop_size: int) -> np.ndarray:
    _, h, w = image.shape
    if crop_size > h or crop_size > w:
        raise DataError(f"crop {crop_size} larger than image {h}x{w}")
    top = (h - crop_size) // 2
    left = (w - crop_size) // 2
    return np.ascontiguousarray(image[:, top : top + crop_size, left : left + crop_size])
