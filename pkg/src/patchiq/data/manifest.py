"""Dataset manifests: CSV ingestion, label normalization, grouped splitting.

A manifest row ties an item id to an image path, a raw opinion score, and a
reference-group id. Splits are performed over reference groups so that all
distorted versions of one source image land on the same side; anything else
leaks content between train and test.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..seeding import STREAM_SPLIT, rng_for

MANIFEST_HEADER = ["id", "path", "mos", "ref_group"]


@dataclass
class DatasetItem:
    id: str
    path: str
    mos: float
    ref_group: str


@dataclass
class DatasetManifest:
    items: list[DatasetItem]
    mos_min: float
    mos_max: float

    def __len__(self) -> int:
        return len(self.items)

    def normalize(self, mos: float) -> float:
        """Affine map of the raw label range onto [0, 1]; a degenerate range maps to 0.5."""
        if self.mos_max == self.mos_min:
            return 0.5
        return (mos - self.mos_min) / (self.mos_max - self.mos_min)

    def denormalize(self, value: float) -> float:
        if self.mos_max == self.mos_min:
            return self.mos_min
        return self.mos_min + value * (self.mos_max - self.mos_min)

    def groups(self) -> list[str]:
        seen: dict[str, None] = {}
        for item in self.items:
            seen.setdefault(item.ref_group, None)
        return list(seen)

    def subset(self, group_set: set[str]) -> "DatasetManifest":
        kept = [it for it in self.items if it.ref_group in group_set]
        # the normalization map of the parent manifest is retained on purpose
        return DatasetManifest(items=kept, mos_min=self.mos_min, mos_max=self.mos_max)


def build_manifest(items: list[DatasetItem]) -> DatasetManifest:
    if not items:
        raise DataError("manifest has no items")
    ids = set()
    for it in items:
        if it.id in ids:
            raise DataError(f"duplicate item id {it.id!r}")
        ids.add(it.id)
        if not np.isfinite(it.mos):
            raise DataError(f"item {it.id!r} has non-finite mos {it.mos}")
    labels = [it.mos for it in items]
    return DatasetManifest(items=items, mos_min=min(labels), mos_max=max(labels))


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a manifest CSV with header id,path,mos,ref_group."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"manifest file not found: {p}")
    items: list[DatasetItem] = []
    with open(p, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{p}: empty manifest") from None
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise DataError(f"{p}: expected header {','.join(MANIFEST_HEADER)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{p}: line {lineno}: expected 4 fields, got {len(row)}")
            item_id, item_path, mos_str, group = (c.strip() for c in row)
            try:
                mos = float(mos_str)
            except ValueError:
                raise DataError(f"{p}: line {lineno}: non-numeric mos value {mos_str!r}") from None
            items.append(DatasetItem(id=item_id, path=item_path, mos=mos, ref_group=group))
    manifest = build_manifest(items)
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for it in manifest.items:
            writer.writerow([it.id, it.path, repr(it.mos), it.ref_group])


def split(
    manifest: DatasetManifest, ratio: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministic grouped split; round(ratio * #groups) groups go to train.

    The count is clamped so both sides stay non-empty.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must lie in (0, 1), got {ratio}")
    groups = sorted(manifest.groups())
    if len(groups) < 2:
        raise DataError(f"split needs at least 2 reference groups, got {len(groups)}")
    n_train = int(round(ratio * len(groups)))
    n_train = min(max(n_train, 1), len(groups) - 1)
    rng = rng_for(seed, STREAM_SPLIT)
    order = rng.permutation(len(groups))
    train_groups = {groups[i] for i in order[:n_train]}
    test_groups = {groups[i] for i in order[n_train:]}
    return manifest.subset(train_groups), manifest.subset(test_groups)
