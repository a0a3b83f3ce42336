"""Model and training configuration, mirrored 1:1 by the run-config JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .optim import LrSchedule

# Named backbone presets for ablation sweeps; explicit config keys override.
BACKBONE_PRESETS: dict[str, dict] = {
    "toy": {},
    "micro": {
        "embed_dim": 32,
        "num_layers": 3,
        "extract_layers": [2, 3],
        "d1": 32,
        "d2": 16,
        "mlp_hidden": 32,
    },
}


@dataclass
class ModelConfig:
    """Architectural hyperparameters.

    Defaults are the desk-scale values; the full-scale settings (image 224,
    embed 768, 12 layers, extract {7..10}, heads 4, window 4) remain
    expressible through the same fields.
    """

    patch_size: int = 8
    image_size: int = 32
    embed_dim: int = 64
    num_layers: int = 6
    extract_layers: tuple[int, ...] = (3, 4, 5, 6)
    heads: int = 2
    window_size: int = 2
    d1: int = 64
    d2: int = 32
    mlp_hidden: int = 64
    scale: float = 0.1
    tab_per_stage: int = 2
    stages: int = 2
    tab_temperature: str = "sqrt"  # "sqrt" -> sqrt(N), "linear" -> N
    relative_bias: bool = False
    enable_tab: bool = True
    enable_sstb: bool = True
    enable_dual_branch: bool = True
    backbone: str = "toy"

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_tokens(self) -> int:
        return self.grid_size * self.grid_size

    @property
    def stage_dims(self) -> tuple[int, ...]:
        dims = [self.d1] + [self.d2] * (self.stages - 1)
        return tuple(dims[: self.stages])

    def validate(self) -> "ModelConfig":
        if self.patch_size <= 0 or self.image_size <= 0:
            raise ConfigError("patch_size and image_size must be positive")
        if self.image_size % self.patch_size != 0:
            raise ConfigError(
                f"image_size {self.image_size} is not a multiple of patch_size {self.patch_size}"
            )
        if self.grid_size % self.window_size != 0:
            raise ConfigError(
                f"token grid {self.grid_size} is not divisible by window_size {self.window_size}"
            )
        if self.embed_dim % self.heads != 0:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        for dim in self.stage_dims:
            if dim % self.heads != 0:
                raise ConfigError(f"stage dim {dim} not divisible by heads {self.heads}")
        layers = tuple(self.extract_layers)
        if not layers:
            raise ConfigError("extract_layers must be non-empty")
        if list(layers) != sorted(set(layers)):
            raise ConfigError(f"extract_layers must be strictly ascending, got {layers}")
        if layers[0] < 1 or layers[-1] > self.num_layers:
            raise ConfigError(
                f"extract_layers {layers} out of range for {self.num_layers} backbone layers"
            )
        if not 0 < self.scale <= 1 and self.scale != 0.0:
            # scale 0 is allowed for the degenerate-identity checks
            raise ConfigError(f"scale must lie in (0, 1] (or be 0), got {self.scale}")
        if self.tab_temperature not in ("sqrt", "linear"):
            raise ConfigError(f"tab_temperature must be 'sqrt' or 'linear', got {self.tab_temperature}")
        if self.stages < 1:
            raise ConfigError(f"stages must be >= 1, got {self.stages}")
        if self.tab_per_stage < 1:
            raise ConfigError(f"tab_per_stage must be >= 1, got {self.tab_per_stage}")
        if self.backbone not in BACKBONE_PRESETS:
            raise ConfigError(
                f"unknown backbone preset {self.backbone!r}; known: {sorted(BACKBONE_PRESETS)}"
            )
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"model config must be an object, got {type(raw).__name__}")
        preset = raw.get("backbone", "toy")
        if preset not in BACKBONE_PRESETS:
            raise ConfigError(f"unknown backbone preset {preset!r}; known: {sorted(BACKBONE_PRESETS)}")
        merged = dict(BACKBONE_PRESETS[preset])
        merged.update(raw)
        known = set(cls.__dataclass_fields__)
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        if "extract_layers" in merged:
            merged["extract_layers"] = tuple(int(v) for v in merged["extract_layers"])
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(f"bad model config: {exc}") from exc
        return cfg.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["extract_layers"] = list(self.extract_layers)
        return d


@dataclass
class TrainConfig:
    """Full run configuration: model, optimizer, data protocol."""

    model: ModelConfig = field(default_factory=ModelConfig)
    lr: float = 1e-5
    weight_decay: float = 1e-5
    batch_size: int = 8
    epochs: int = 50
    lr_schedule: LrSchedule = field(default_factory=LrSchedule)
    crop_size: int = 32
    flip_prob: float = 0.5
    split_ratio: float = 0.8
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    test_crops: int = 20

    def validate(self) -> "TrainConfig":
        self.model.validate()
        if self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("lr must be positive and weight_decay non-negative")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must lie in [0, 1], got {self.flip_prob}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.test_crops < 1:
            raise ConfigError(f"test_crops must be >= 1, got {self.test_crops}")
        if self.crop_size != self.model.image_size:
            raise ConfigError(
                f"crop_size {self.crop_size} must equal model.image_size {self.model.image_size}"
            )
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be an object, got {type(raw).__name__}")
        raw = dict(raw)
        model = ModelConfig.from_dict(raw.pop("model", {}))
        sched_raw = raw.pop("lr_schedule", {})
        if not isinstance(sched_raw, dict):
            raise ConfigError("lr_schedule must be an object")
        sched_raw = dict(sched_raw)
        sched_raw.setdefault("base_lr", raw.get("lr", 1e-5))
        try:
            schedule = LrSchedule(**sched_raw)
        except TypeError as exc:
            raise ConfigError(f"bad lr_schedule: {exc}") from exc
        known = set(cls.__dataclass_fields__) - {"model", "lr_schedule"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seeds" in raw:
            raw["seeds"] = tuple(int(s) for s in raw["seeds"])
        try:
            cfg = cls(model=model, lr_schedule=schedule, **raw)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc
        return cfg.validate()

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "lr_schedule": asdict(self.lr_schedule),
            "crop_size": self.crop_size,
            "flip_prob": self.flip_prob,
            "split_ratio": self.split_ratio,
            "seeds": list(self.seeds),
            "test_crops": self.test_crops,
        }


def load_config(path: str | Path) -> TrainConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    return TrainConfig.from_dict(raw)
