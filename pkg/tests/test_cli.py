"""End-to-end CLI surface: verbs, flags, exit codes, artifacts."""

import json
from pathlib import Path

import numpy as np
import pytest

from patchiq.checks import MICRO_CONFIG
from patchiq.cli import main
from patchiq.data.synth import SynthConfig, export_dataset, synth_generate


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data_dir = root / "data"
    ds = synth_generate(SynthConfig(num_refs=4, per_ref=4, image_size=16, seed=21))
    manifest = export_dataset(ds, data_dir)
    config = {
        "model": MICRO_CONFIG.to_dict(),
        "lr": 1e-3,
        "weight_decay": 1e-5,
        "batch_size": 4,
        "epochs": 2,
        "lr_schedule": {"t_max": 2, "eta_min": 0.0},
        "crop_size": 16,
        "flip_prob": 0.5,
        "split_ratio": 0.8,
        "seeds": [0],
        "test_crops": 2,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    return root, manifest, config_path


def run_train(workspace) -> Path:
    root, manifest, config_path = workspace
    out = root / "run"
    if not (out / "checkpoint.json").exists():
        code = main(
            ["train", "--config", str(config_path), "--manifest", str(manifest), "--out", str(out)]
        )
        assert code == 0
    return out / "checkpoint.json"


def test_train_writes_checkpoint_and_loss_artifacts(workspace):
    ckpt = run_train(workspace)
    out = ckpt.parent
    assert ckpt.exists()
    assert (out / "loss_log.csv").exists()
    assert (out / "loss_curve.png").exists()
    log = (out / "loss_log.csv").read_text().splitlines()
    assert log[0] == "epoch,lr,loss"
    assert len(log) == 3  # header + 2 epochs


def test_evaluate_writes_reports(workspace):
    root, manifest, config_path = workspace
    ckpt = run_train(workspace)
    out = root / "eval"
    code = main(
        [
            "evaluate",
            "--config", str(config_path),
            "--manifest", str(manifest),
            "--checkpoint", str(ckpt),
            "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "report.json").exists()
    assert (out / "report.txt").exists()
    assert (out / "predictions.csv").exists()
    assert (out / "scatter.png").exists()
    doc = json.loads((out / "report.json").read_text())
    assert "seeds" in doc and "mean" in doc
    assert "duration" not in json.dumps(doc)


def test_predict_prints_score(workspace, capsys):
    root, manifest, _ = workspace
    ckpt = run_train(workspace)
    image = next(manifest.parent.glob("*.ppm"))
    out = root / "pred"
    code = main(
        ["predict", "--checkpoint", str(ckpt), "--image", str(image), "--out", str(out)]
    )
    assert code == 0
    captured = capsys.readouterr()
    assert "score:" in captured.out
    doc = json.loads((out / "prediction.json").read_text())
    assert len(doc["first_crop"]["scores"]) == 4


def test_visualize_writes_maps(workspace):
    root, manifest, _ = workspace
    ckpt = run_train(workspace)
    out = root / "viz"
    image = next(manifest.parent.glob("*.ppm"))
    code = main(["visualize", "--checkpoint", str(ckpt), "--image", str(image), "--out", str(out)])
    assert code == 0
    for name in ("weight_map.pgm", "score_map.pgm", "final_map.pgm", "maps.json", "maps.png"):
        assert (out / name).exists()


def test_ablate_scale_sweep(workspace):
    root, manifest, config_path = workspace
    out = root / "ablate"
    code = main(
        [
            "ablate",
            "--config", str(config_path),
            "--manifest", str(manifest),
            "--param", "scale",
            "--values", "0.1,0.8",
            "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads((out / "ablation.json").read_text())
    assert [row["value"] for row in doc] == [0.1, 0.8]
    assert (out / "ablation.csv").exists()
    assert (out / "ablation.png").exists()


def test_gradcheck_passes(capsys):
    code = main(["gradcheck"])
    assert code == 0
    out = capsys.readouterr().out
    assert "tab_forward" in out
    assert "full_model_16x16_p8" in out


def test_synth_data_roundtrip(tmp_path, capsys):
    out = tmp_path / "synth"
    code = main(["synth-data", "--out", str(out), "--seed", "3"])
    assert code == 0
    manifest = out / "manifest.csv"
    assert manifest.exists()
    lines = manifest.read_text().splitlines()
    assert lines[0] == "id,path,mos,ref_group"
    assert len(lines) == 1 + 8 * 12  # defaults: 8 refs x 12 severities


class TestExitCodes:
    def test_missing_manifest_is_data_error(self, workspace, tmp_path):
        root, _, config_path = workspace
        code = main(
            [
                "train",
                "--config", str(config_path),
                "--manifest", str(tmp_path / "missing.csv"),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert code == 3

    def test_bad_config_is_config_error(self, workspace, tmp_path):
        root, manifest, _ = workspace
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"model": {"image_size": 33}}))
        code = main(
            ["train", "--config", str(bad), "--manifest", str(manifest), "--out", str(tmp_path / "o")]
        )
        assert code == 2

    def test_unknown_ablation_value_is_config_error(self, workspace, tmp_path):
        root, manifest, config_path = workspace
        code = main(
            [
                "ablate",
                "--config", str(config_path),
                "--manifest", str(manifest),
                "--param", "scale",
                "--values", "abc",
                "--out", str(tmp_path / "o"),
            ]
        )
        assert code == 2

    def test_corrupt_checkpoint_is_data_error(self, workspace, tmp_path):
        root, manifest, _ = workspace
        bad = tmp_path / "ckpt.json"
        bad.write_text("{}")
        code = main(
            [
                "evaluate",
                "--manifest", str(manifest),
                "--checkpoint", str(bad),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert code == 3
