"""Report rendering: JSON + aligned-column text + CSV, with figures.

Every rendered artifact is a pure function of the report contents, so two
identical runs write identical bytes (figures carry pinned metadata for the
same reason).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .ablate import AblationRow
from .evaluate import MetricReport
from .train import TrainResult

_PNG_METADATA = {"Software": "patchiq"}


def _fmt(value: float | None) -> str:
    return "   n/a" if value is None else f"{value:+.4f}"


def metric_table(report: MetricReport) -> str:
    lines = [f"{'seed':>6}  {'plcc':>8}  {'srocc':>8}  {'items':>6}  error"]
    for r in report.seed_results:
        lines.append(
            f"{r.seed:>6}  {_fmt(r.plcc):>8}  {_fmt(r.srocc):>8}  {len(r.items):>6}  {r.error or ''}"
        )
    lines.append(f"{'mean':>6}  {_fmt(report.mean_plcc):>8}  {_fmt(report.mean_srocc):>8}")
    return "\n".join(lines)


def write_metric_report(report: MetricReport, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "report.json",
        "text": out / "report.txt",
        "csv": out / "predictions.csv",
        "figure": out / "scatter.png",
    }
    paths["json"].write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    paths["text"].write_text(metric_table(report) + "\n")
    with open(paths["csv"], "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["seed", "id", "mos", "predicted"])
        for r in report.seed_results:
            for item in r.items:
                writer.writerow([r.seed, item.id, repr(item.mos), repr(item.predicted)])
    _scatter_figure(report, paths["figure"])
    return paths


def _scatter_figure(report: MetricReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    for r in report.seed_results:
        ax.scatter(
            [it.mos for it in r.items],
            [it.predicted for it in r.items],
            s=18,
            alpha=0.7,
            label=f"seed {r.seed}",
        )
    ax.set_xlabel("ground-truth score")
    ax.set_ylabel("predicted score")
    title = f"plcc={_fmt(report.mean_plcc)}  srocc={_fmt(report.mean_srocc)}"
    ax.set_title(title)
    if len(report.seed_results) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def write_loss_log(result: TrainResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "loss_log.csv", "figure": out / "loss_curve.png"}
    with open(paths["csv"], "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "lr", "loss"])
        for epoch, (lr, loss) in enumerate(zip(result.learning_rates, result.epoch_losses)):
            writer.writerow([epoch, repr(lr), repr(loss)])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(result.epoch_losses, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean training loss")
    ax.set_yscale("log" if result.epoch_losses and min(result.epoch_losses) > 0 else "linear")
    fig.tight_layout()
    fig.savefig(paths["figure"], dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return paths


def ablation_table(rows: list[AblationRow]) -> str:
    lines = [f"{'parameter':>20}  {'value':>10}  {'plcc':>8}  {'srocc':>8}"]
    for row in rows:
        lines.append(
            f"{row.parameter:>20}  {str(row.value):>10}  "
            f"{_fmt(row.report.mean_plcc):>8}  {_fmt(row.report.mean_srocc):>8}"
        )
    return "\n".join(lines)


def write_ablation_report(rows: list[AblationRow], out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "ablation.json",
        "text": out / "ablation.txt",
        "csv": out / "ablation.csv",
        "figure": out / "ablation.png",
    }
    doc = [
        {"parameter": r.parameter, "value": r.value, "report": r.report.to_dict()} for r in rows
    ]
    paths["json"].write_text(json.dumps(doc, indent=2) + "\n")
    paths["text"].write_text(ablation_table(rows) + "\n")
    with open(paths["csv"], "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["parameter", "value", "mean_plcc", "mean_srocc"])
        for r in rows:
            writer.writerow(
                [
                    r.parameter,
                    r.value,
                    "" if r.report.mean_plcc is None else repr(r.report.mean_plcc),
                    "" if r.report.mean_srocc is None else repr(r.report.mean_srocc),
                ]
            )
    _ablation_figure(rows, paths["figure"])
    return paths


def _ablation_figure(rows: list[AblationRow], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [str(r.value) for r in rows]
    x = range(len(rows))
    plccs = [r.report.mean_plcc for r in rows]
    sroccs = [r.report.mean_srocc for r in rows]
    ax.plot(x, [v if v is not None else float("nan") for v in plccs], "o-", label="plcc")
    ax.plot(x, [v if v is not None else float("nan") for v in sroccs], "s--", label="srocc")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_xlabel(rows[0].parameter if rows else "value")
    ax.set_ylabel("mean correlation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
