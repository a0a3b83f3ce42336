from .augment import center_crop, multi_crop, random_crop_flip
from .imageio import read_image, read_ppm, write_pgm, write_ppm
from .manifest import (
    DatasetItem,
    DatasetManifest,
    build_manifest,
    load_manifest,
    save_manifest,
    split,
)
from .synth import (
    DISTORTIONS,
    SynthConfig,
    SyntheticDataset,
    apply_distortion,
    export_dataset,
    synth_generate,
)

__all__ = [
    "DatasetItem",
    "DatasetManifest",
    "DISTORTIONS",
    "SynthConfig",
    "SyntheticDataset",
    "apply_distortion",
    "build_manifest",
    "center_crop",
    "export_dataset",
    "load_manifest",
    "multi_crop",
    "random_crop_flip",
    "read_image",
    "read_ppm",
    "save_manifest",
    "split",
    "synth_generate",
    "write_pgm",
    "write_ppm",
]
