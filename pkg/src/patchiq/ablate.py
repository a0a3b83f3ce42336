"""Ablation sweeps: one train+evaluate run per parameter value, shared seeds.

Module toggles remove the corresponding block (identity path); disabling the
dual branch pins every patch weight to 1 so the score is the plain mean of
the patch scores.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import BACKBONE_PRESETS, ModelConfig, TrainConfig
from .data.manifest import DatasetManifest
from .errors import ConfigError
from .evaluate import MetricReport, evaluate
from .train import ImageSource, train

ABLATABLE = ("scale", "enable_tab", "enable_sstb", "enable_dual_branch", "backbone")


@dataclass
class AblationRow:
    parameter: str
    value: object
    report: MetricReport


def apply_parameter(config: TrainConfig, param: str, value) -> TrainConfig:
    if param not in ABLATABLE:
        raise ConfigError(f"unknown ablation parameter {param!r}; choose from {ABLATABLE}")
    model_dict = config.model.to_dict()
    if param == "scale":
        model_dict["scale"] = float(value)
    elif param == "backbone":
        if value not in BACKBONE_PRESETS:
            raise ConfigError(f"unknown backbone preset {value!r}")
        model_dict["backbone"] = value
        for key in BACKBONE_PRESETS[value]:
            model_dict.pop(key, None)
    else:
        if not isinstance(value, bool):
            raise ConfigError(f"{param} expects a boolean, got {value!r}")
        model_dict[param] = value
    model = ModelConfig.from_dict(model_dict)
    return replace(config, model=model).validate()


def ablate(
    base: TrainConfig,
    param: str,
    values: list,
    manifest: DatasetManifest,
    source: ImageSource,
) -> list[AblationRow]:
    rows: list[AblationRow] = []
    for value in values:
        cfg = apply_parameter(base, param, value)
        result = train(cfg, manifest, source)
        report = evaluate(result.checkpoint, manifest, source, cfg)
        rows.append(AblationRow(parameter=param, value=value, report=report))
    return rows


def parse_sweep_values(param: str, raw: str) -> list:
    """Parse a comma-separated CLI value list for the given parameter."""
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty sweep value list")
    if param == "scale":
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"cannot parse scale sweep values {raw!r}: {exc}") from exc
    if param == "backbone":
        return parts
    out = []
    for p in parts:
        low = p.lower()
        if low in ("true", "1", "yes", "on"):
            out.append(True)
        elif low in ("false", "0", "no", "off"):
            out.append(False)
        else:
            raise ConfigError(f"cannot parse boolean sweep value {p!r}")
    return out
