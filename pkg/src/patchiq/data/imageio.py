"""Image file ingestion and export.

Images are planar RGB float64 arrays of shape (3, H, W) with values in
[0, 1]. 8-bit PPM is read and written natively (it is the synthetic-export
format); PNG decoding goes through Pillow. Grayscale maps are exported as
ASCII PGM so the bytes are stable and diffable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    """Binary 8-bit P6; input is (3, H, W) in [0, 1]."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise DataError(f"write_ppm expects (3, H, W), got {image.shape}")
    _, h, w = image.shape
    raw = to_uint8(image).transpose(1, 2, 0).tobytes()
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(raw)


def read_ppm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise DataError(f"{path}: not a binary PPM file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment until end of line
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(x) for x in fields)
    except ValueError as exc:
        raise DataError(f"{path}: malformed PPM header") from exc
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit PPM supported, maxval={maxval}")
    if len(data) - pos < w * h * 3:
        raise DataError(f"{path}: truncated PPM payload")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).transpose(2, 0, 1).astype(np.float64) / 255.0


def read_image(path: str | Path) -> np.ndarray:
    """Read a PPM or PNG file into a (3, H, W) array in [0, 1]."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"image file not found: {p}")
    if p.suffix.lower() == ".ppm":
        return read_ppm(p)
    try:
        with Image.open(p) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except Exception as exc:
        raise DataError(f"{p}: failed to decode image: {exc}") from exc
    return arr.transpose(2, 0, 1) / 255.0


def write_pgm(path: str | Path, values: np.ndarray) -> None:
    """ASCII P2 PGM of a 2-D map, min-max normalized to 0..255."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise DataError(f"write_pgm expects a 2-D map, got {v.shape}")
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
    pix = np.clip(np.rint(scaled * 255.0), 0, 255).astype(int)
    lines = [f"P2", f"{v.shape[1]} {v.shape[0]}", "255"]
    lines += [" ".join(str(x) for x in row) for row in pix]
    Path(path).write_text("\n".join(lines) + "\n")
