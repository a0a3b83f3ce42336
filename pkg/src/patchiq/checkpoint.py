"""Checkpoint files: one JSON document, bit-exact float64 round trip.

Values are serialized through Python's shortest-roundtrip float repr, so
save -> load reproduces every parameter exactly and forward outputs are
identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .errors import DataError
from .network import QualityNet

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    parameters: dict[str, np.ndarray]
    step: int
    config: TrainConfig
    format_version: int = FORMAT_VERSION

    def save(self, path: str | Path) -> None:
        doc = {
            "format_version": self.format_version,
            "step": self.step,
            "config": self.config.to_dict(),
            "parameters": {
                name: {"shape": list(arr.shape), "values": arr.reshape(-1).tolist()}
                for name, arr in self.parameters.items()
            },
        }
        Path(path).write_text(json.dumps(doc) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"checkpoint file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"checkpoint {p} is not valid JSON: {exc}") from exc
        if doc.get("format_version") != FORMAT_VERSION:
            raise DataError(f"unsupported checkpoint format version {doc.get('format_version')!r}")
        params = {
            name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["parameters"].items()
        }
        return cls(
            parameters=params,
            step=int(doc["step"]),
            config=TrainConfig.from_dict(doc["config"]),
        )

    @classmethod
    def from_net(cls, net: QualityNet, config: TrainConfig, step: int) -> "Checkpoint":
        params = {name: p.data.copy() for name, p in net.named_parameters()}
        return cls(parameters=params, step=step, config=config)

    def build_net(self) -> QualityNet:
        net = QualityNet(self.config.model, seed=0)
        net.load_parameter_values(self.parameters)
        return net
