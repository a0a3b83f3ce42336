"""Report rendering: text alignment, CSV/JSON content, byte determinism."""

import json

import numpy as np
import pytest

from patchiq.ablate import AblationRow
from patchiq.evaluate import ItemPrediction, MetricReport, SeedResult
from patchiq.report import (
    ablation_table,
    metric_table,
    write_ablation_report,
    write_loss_log,
    write_metric_report,
)
from patchiq.train import TrainResult


def make_report(n_seeds=2) -> MetricReport:
    rows = []
    for s in range(n_seeds):
        items = [
            ItemPrediction(id=f"item{k}", mos=0.1 * k + s * 0.01, predicted=0.1 * k + 0.02)
            for k in range(4)
        ]
        rows.append(SeedResult(seed=s, plcc=0.9 + 0.01 * s, srocc=0.8 + 0.01 * s, items=items))
    mean_p = float(np.mean([r.plcc for r in rows]))
    mean_s = float(np.mean([r.srocc for r in rows]))
    return MetricReport(
        seed_results=rows,
        mean_plcc=mean_p,
        mean_srocc=mean_s,
        test_crops=3,
        config={"epochs": 1},
        duration_seconds=1.5,
    )


def test_metric_table_has_row_per_seed_plus_mean():
    table = metric_table(make_report(3))
    lines = table.splitlines()
    assert len(lines) == 1 + 3 + 1
    assert lines[-1].strip().startswith("mean")


def test_metric_table_shows_errors():
    report = make_report(1)
    report.seed_results.append(
        SeedResult(seed=9, plcc=None, srocc=None, items=[], error="constant predictions")
    )
    table = metric_table(report)
    assert "constant predictions" in table
    assert "n/a" in table


def test_write_metric_report_artifacts(tmp_path):
    paths = write_metric_report(make_report(), tmp_path)
    doc = json.loads(paths["json"].read_text())
    assert doc["mean"]["plcc"] == pytest.approx(0.905)
    csv_lines = paths["csv"].read_text().splitlines()
    assert csv_lines[0] == "seed,id,mos,predicted"
    assert len(csv_lines) == 1 + 2 * 4
    assert paths["figure"].exists()


def test_report_bytes_deterministic(tmp_path):
    a = write_metric_report(make_report(), tmp_path / "a")
    b = write_metric_report(make_report(), tmp_path / "b")
    for key in ("json", "text", "csv"):
        assert a[key].read_bytes() == b[key].read_bytes()


def test_loss_log_csv(tmp_path):
    result = TrainResult(checkpoint=None, epoch_losses=[0.5, 0.25], learning_rates=[1e-3, 5e-4])
    paths = write_loss_log(result, tmp_path)
    lines = paths["csv"].read_text().splitlines()
    assert lines[0] == "epoch,lr,loss"
    assert lines[1].startswith("0,0.001,")
    assert paths["figure"].exists()


def test_ablation_table_and_files(tmp_path):
    rows = [
        AblationRow(parameter="scale", value=0.1, report=make_report()),
        AblationRow(parameter="scale", value=0.2, report=make_report()),
    ]
    table = ablation_table(rows)
    assert len(table.splitlines()) == 3
    paths = write_ablation_report(rows, tmp_path)
    doc = json.loads(paths["json"].read_text())
    assert [r["value"] for r in doc] == [0.1, 0.2]
    csv_lines = paths["csv"].read_text().splitlines()
    assert csv_lines[0] == "parameter,value,mean_plcc,mean_srocc"
    assert paths["figure"].exists()
