"""Command-line front end: ``tnvqc train | gradcheck | eval``.

Exit codes: 0 success, 1 gradient check failure, 2 usage error, 3 data or
checkpoint error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import load_split
from .errors import ConfigError, FormatError, InputError, NumericError
from .gradcheck import run_all
from .training import MODES, EpochMetrics, HybridModel, TrainConfig, evaluate, train

EXIT_OK = 0
EXIT_GRADCHECK = 1
EXIT_USAGE = 2
EXIT_DATA = 3

log = logging.getLogger("tnvqc")

# flag name -> TrainConfig field
_FLAG_FIELDS = {
    "mode": "mode",
    "chi": "chi",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "lr": "learning_rate",
    "optimizer": "optimizer",
    "seed": "seed",
    "workers": "workers",
    "output_site": "output_site",
    "init_noise": "init_noise",
}


class UsageFailure(Exception):
    pass


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    if name not in kinds:
        raise UsageFailure(f"unknown config key {name!r}")
    kind = str(kinds[name])
    text = text.strip()
    if "bool" in kind:
        return text.lower() in ("1", "true", "yes", "on")
    if text.lower() in ("none", ""):
        return None
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageFailure(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        key = _FLAG_FIELDS.get(key, key)
        values[key] = _coerce(key, value)
    return values


def write_config_file(path, config: TrainConfig):
    lines = [f"{k} = {v}" for k, v in config.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    values = read_config_file(args.config) if args.config else {}
    chi_given = args.chi is not None or values.get("chi") is not None
    for flag, field_name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[field_name] = value
    mode = values.pop("mode", None)
    if mode is None:
        raise UsageFailure("--mode is required (flag or config file)")
    if mode == "pca-vqc" and chi_given:
        raise UsageFailure("--chi does not apply to --mode pca-vqc")
    try:
        return TrainConfig.for_mode(mode, **values)
    except (ConfigError, TypeError) as exc:
        raise UsageFailure(str(exc)) from exc


def _write_metrics(path: Path, metrics: list[EpochMetrics]):
    rows = [EpochMetrics.CSV_HEADER] + [m.csv_row() for m in metrics]
    path.write_text("\n".join(rows) + "\n")


def _checkpoint_of(model: HybridModel) -> Checkpoint:
    return Checkpoint(mode=model.mode, mps=model.mps, vqc_params=model.vqc_params, pca=model.pca)


def _model_of(ckpt: Checkpoint) -> HybridModel:
    try:
        return HybridModel(ckpt.mode, mps=ckpt.mps, vqc_params=ckpt.vqc_params, pca=ckpt.pca)
    except ConfigError as exc:
        raise FormatError(f"checkpoint does not describe a usable {ckpt.mode} model: {exc}") from exc


def cmd_train(args) -> int:
    config = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    resolved = config.to_dict()
    resolved["data_dir"] = str(args.data_dir)
    run_id = hashlib.sha1(
        (json.dumps(resolved, sort_keys=True) + started.isoformat()).encode()
    ).hexdigest()
    manifest = {
        "run_id": run_id,
        "config": resolved,
        "output_dir": str(out),
        "backend": kernels.BACKEND,
        "started": started.isoformat(),
        "finished": None,
    }
    write_config_file(out / "config.txt", config)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    train_set = load_split(args.data_dir, "train")
    test_set = load_split(args.data_dir, "test")
    log.info("train %d / test %d samples, backend %s", len(train_set), len(test_set), kernels.BACKEND)

    metrics: list[EpochMetrics] = []

    def on_epoch(m: EpochMetrics):
        metrics.append(m)
        _write_metrics(out / "metrics.csv", metrics)

    result = train(config, train_set, test_set, on_epoch=on_epoch)
    save_checkpoint(out / "model.ckpt", _checkpoint_of(result.model))
    last = result.metrics[-1]
    summary = {
        "config": config.to_dict(),
        "final_metrics": {
            "epoch": last.epoch,
            "train_loss": last.train_loss,
            "train_acc": last.train_acc,
            "test_loss": last.test_loss,
            "test_acc": last.test_acc,
        },
        "best_test_acc": result.best_test_acc,
        "wall_seconds": result.wall_seconds,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    manifest["finished"] = datetime.now(timezone.utc).isoformat()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps(summary["final_metrics"]))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.trials < 1:
        raise UsageFailure("--trials must be >= 1")
    report = run_all(args.trials, args.seed)
    for line in report.lines():
        print(line)
    if not report.ok:
        for r in report.results:
            if not r.ok:
                print(f"tolerance breach in {r.name} at {r.worst_path}", file=sys.stderr)
        return EXIT_GRADCHECK
    return EXIT_OK


def cmd_eval(args) -> int:
    model = _model_of(load_checkpoint(args.checkpoint))
    dataset = load_split(args.data_dir, args.split)
    loss, acc = evaluate(model, dataset)
    print(json.dumps({"split": args.split, "samples": len(dataset), "loss": loss, "accuracy": acc}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tnvqc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one of the three pipelines")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--chi", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--optimizer", choices=("adam", "rmsprop"))
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-site", type=int)
    p.add_argument("--init-noise", type=float)
    p.add_argument("--config", type=Path, help="flat key=value file; flags take precedence")
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gradcheck", help="compare analytic gradients with oracles")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except UsageFailure as exc:
        parser.error(str(exc))
    except (FormatError, InputError, FileNotFoundError) as exc:
        print(f"tnvqc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"tnvqc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
