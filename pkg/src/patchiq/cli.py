"""Command-line harness.

Verbs: train, evaluate, predict, visualize, ablate, gradcheck, synth-data.
Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ablate import ABLATABLE, ablate, parse_sweep_values
from .checkpoint import Checkpoint
from .checks import run_all_checks
from .config import TrainConfig, load_config
from .data.imageio import read_image
from .data.manifest import load_manifest
from .data.synth import SynthConfig, export_dataset, synth_generate
from .errors import (
    ConfigError,
    DataError,
    GradientCheckError,
    NumericError,
    ParameterError,
    PatchIQError,
)
from .evaluate import evaluate, predict_item
from .report import metric_table, write_ablation_report, write_loss_log, write_metric_report
from .train import source_for_manifest, train
from .visualize import visualize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchiq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"patchiq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *flags: str) -> None:
        if "config" in flags:
            p.add_argument("--config", type=Path, help="run config JSON")
        if "manifest" in flags:
            p.add_argument("--manifest", type=Path, required=True, help="dataset manifest CSV")
        if "checkpoint" in flags:
            p.add_argument("--checkpoint", type=Path, required=True, help="checkpoint JSON")
        if "seed" in flags:
            p.add_argument("--seed", type=int, default=None, help="override the configured seed list")
        if "out" in flags:
            p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    common(p, "config", "manifest", "seed", "out")

    p = sub.add_parser("evaluate", help="evaluate a checkpoint over the seeded splits")
    common(p, "config", "manifest", "checkpoint", "seed", "out")

    p = sub.add_parser("predict", help="score a single image")
    common(p, "checkpoint", "seed")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--out", type=Path, help="optional directory for prediction.json")

    p = sub.add_parser("visualize", help="export per-patch weight/score/final maps")
    common(p, "checkpoint", "out")
    p.add_argument("--image", type=Path, required=True)

    p = sub.add_parser("ablate", help="sweep one parameter, train+evaluate per value")
    common(p, "config", "manifest", "seed", "out")
    p.add_argument("--param", required=True, choices=ABLATABLE)
    p.add_argument("--values", required=True, help="comma-separated value list")

    p = sub.add_parser("gradcheck", help="finite-difference checks for all registered ops")
    p.add_argument("--out", type=Path, help="optional directory for gradcheck.json")

    p = sub.add_parser("synth-data", help="generate a synthetic distortion dataset")
    common(p, "config", "seed", "out")

    return parser


def _load_train_config(args) -> TrainConfig:
    config = load_config(args.config) if args.config else TrainConfig().validate()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seeds=(args.seed,))
    return config


def _cmd_train(args) -> int:
    config = _load_train_config(args)
    manifest = load_manifest(args.manifest)
    source = source_for_manifest(args.manifest)
    started = time.perf_counter()
    result = train(config, manifest, source)
    elapsed = time.perf_counter() - started
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt_path = args.out / "checkpoint.json"
    result.checkpoint.save(ckpt_path)
    write_loss_log(result, args.out)
    final = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    print(f"trained {config.epochs} epochs in {elapsed:.1f}s; final mean loss {final:.6f}")
    print(f"checkpoint written to {ckpt_path}")
    return 0


def _cmd_evaluate(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    config = _load_train_config(args) if (args.config or args.seed is not None) else checkpoint.config
    manifest = load_manifest(args.manifest)
    source = source_for_manifest(args.manifest)
    report = evaluate(checkpoint, manifest, source, config)
    write_metric_report(report, args.out)
    print(metric_table(report))
    print(f"evaluated in {report.duration_seconds:.1f}s; reports written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    image = read_image(args.image)
    net = checkpoint.build_net()
    config = checkpoint.config
    seed = args.seed if args.seed is not None else config.seeds[0]
    score, first = predict_item(net, image, config.test_crops, seed, config.crop_size)
    print(f"score: {score:.6f} (normalized scale, {config.test_crops} crops, seed {seed})")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        doc = {
            "image": str(args.image),
            "score": score,
            "test_crops": config.test_crops,
            "seed": seed,
            "first_crop": {
                "scores": first.scores.tolist(),
                "weights": first.weights.tolist(),
                "final": first.final,
            },
        }
        (args.out / "prediction.json").write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_visualize(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    image = read_image(args.image)
    files = visualize(checkpoint, image, args.out)
    print(f"maps written: {files.weight_map}, {files.score_map}, {files.final_map}")
    return 0


def _cmd_ablate(args) -> int:
    config = _load_train_config(args)
    values = parse_sweep_values(args.param, args.values)
    manifest = load_manifest(args.manifest)
    source = source_for_manifest(args.manifest)
    rows = ablate(config, args.param, values, manifest, source)
    write_ablation_report(rows, args.out)
    from .report import ablation_table

    print(ablation_table(rows))
    return 0


def _cmd_gradcheck(args) -> int:
    reports = run_all_checks()
    for r in reports:
        print(r.summary())
    failed = [r for r in reports if not r.passed]
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        doc = [
            {
                "op": r.op,
                "passed": r.passed,
                "max_rel_error": r.max_rel_error,
                "tolerance": r.tolerance,
            }
            for r in reports
        ]
        (args.out / "gradcheck.json").write_text(json.dumps(doc, indent=2) + "\n")
    if failed:
        worst = max(failed, key=lambda r: r.max_rel_error)
        entry = worst.worst()
        raise GradientCheckError(
            f"{len(failed)} op(s) failed; worst is {worst.op!r} at input {entry.input_name!r} "
            f"coordinate {entry.worst_index} with relative error {entry.max_rel_error:.3e}"
        )
    print(f"all {len(reports)} gradient checks passed")
    return 0


def _cmd_synth_data(args) -> int:
    raw = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        raw = doc.get("synth", doc) if isinstance(doc, dict) else {}
    config = SynthConfig.from_dict(raw)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    dataset = synth_generate(config)
    manifest_path = export_dataset(dataset, args.out)
    print(f"{len(dataset.manifest)} items written; manifest at {manifest_path}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "visualize": _cmd_visualize,
    "ablate": _cmd_ablate,
    "gradcheck": _cmd_gradcheck,
    "synth-data": _cmd_synth_data,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, GradientCheckError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except PatchIQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
