"""Command-line workflow: train -> inject -> impute -> eval -> bench.

Exit status: 0 success, 2 parse failure, 3 configuration failure, 4 numeric
or data-precondition failure, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datasets
from .config import PATH_KEYS, RunConfig, read_config, stage_seed
from .errors import AEImputeError, ConfigError, IncompleteTrainingDataError, NumericError, ShapeError
from .impute import impute_dataset
from .metrics import knn_impute, mean_impute, score_masked
from .missingness import inject, missing_rate
from .net import load_model, save_model, train
from .tabular import Dataset, NormStats, load_csv, load_mask, save_csv, save_mask

log = logging.getLogger("aeimpute")

COMMANDS = ("train", "inject", "impute", "eval", "bench")
BENCH_METHODS = ("model+ga", "model+pso", "model+mle", "mean", "knn")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _load_model_and_stats(cfg: RunConfig, n_features: int):
    model, extra = load_model(cfg.path("model", must_exist=True))
    if extra is None:
        raise ConfigError(f"model file {cfg.path('model')} carries no normalization stats")
    stats = NormStats.from_dict(extra)
    if model.input_dim != n_features:
        raise ShapeError(f"model expects {model.input_dim} features, data has {n_features}")
    return model, stats, extra


def cmd_train(cfg: RunConfig) -> dict:
    ds = load_csv(cfg.path("train_data", must_exist=True))
    used = ds.complete_rows()
    if used.size == 0:
        raise IncompleteTrainingDataError(
            f"{cfg.path('train_data')}: every record has a missing cell, nothing to train on"
        )
    complete = ds.values[used]
    stats = NormStats.fit(complete)
    model, history = train(stats.normalize(complete), cfg.train, denoising=cfg.denoising)
    extra = stats.to_dict() | {"feature_names": ds.feature_names, "n_train_records": int(used.size)}
    save_model(model, cfg.path("model"), norm_stats=extra)
    log_path = cfg.paths.get("train_log") or str(cfg.path("model")) + ".log.json"
    excluded = np.setdiff1d(np.arange(ds.n_records), used)
    _write_json(
        log_path,
        {
            "kind": "SDAE" if cfg.denoising else "SAE",
            "record_indices": used.tolist(),
            "excluded_indices": excluded.tolist(),
            "loss_history": history,
            "train_seed": cfg.train.seed,
        },
    )
    log.info("trained on %d complete records (%d excluded)", used.size, excluded.size)
    return {"n_train_records": int(used.size), "final_loss": model.final_loss}


def cmd_inject(cfg: RunConfig) -> dict:
    ds = load_csv(cfg.path("ground_truth", must_exist=True))
    masked, mask = inject(ds.values, cfg.mechanism, cfg.pattern, seed=stage_seed(cfg.seed, "inject"))
    save_csv(Dataset(ds.feature_names, masked), cfg.path("masked"))
    save_mask(ds.feature_names, mask, cfg.path("mask"))
    rate = missing_rate(mask)
    log.info("injected %s/%s missingness, rate %.4f", cfg.mechanism.kind, cfg.pattern.kind, rate)
    return {"missing_rate": rate}


def _impute_normalized(model, stats, ds, impute_cfg, workers):
    mask = ds.mask
    normalized = np.clip(stats.normalize(ds.values), 0.0, 1.0)
    completed_norm, results = impute_dataset(model, normalized, mask, impute_cfg, workers=workers)
    out = ds.values.copy()
    out[mask] = stats.denormalize(completed_norm)[mask]
    return out, results


def cmd_impute(cfg: RunConfig) -> dict:
    ds = load_csv(cfg.path("masked", must_exist=True))
    model, stats, _ = _load_model_and_stats(cfg, ds.n_features)
    out, results = _impute_normalized(model, stats, ds, cfg.impute, cfg.workers)
    save_csv(Dataset(ds.feature_names, out), cfg.path("completed"))
    log_path = cfg.paths.get("impute_log") or str(cfg.path("completed")) + ".log.jsonl"
    with open(log_path, "w") as fh:
        for r in results:
            fh.write(
                json.dumps(
                    {
                        "record": r.index,
                        "objective": r.objective,
                        "attempts": r.attempts,
                        "accepted": r.accepted,
                        "attempt_objectives": r.attempt_objectives,
                    }
                )
                + "\n"
            )
    accepted = sum(r.accepted for r in results)
    log.info("imputed %d records, %d accepted", len(results), accepted)
    return {"n_records_imputed": len(results), "n_accepted": accepted}


def _score(truth: Dataset, completed_values, mask, tolerance):
    if np.any(np.isnan(completed_values)):
        raise NumericError("completed data still has missing cells")
    if not mask.any():
        raise NumericError("mask flags no cells; nothing to evaluate")
    stats = NormStats.fit(truth.values)
    return score_masked(
        stats.normalize(truth.values), stats.normalize(completed_values), mask, tolerance, truth.feature_names
    )


def _load_truth_and_mask(cfg):
    truth = load_csv(cfg.path("ground_truth", must_exist=True))
    if np.any(truth.mask):
        raise NumericError(f"{cfg.path('ground_truth')}: ground truth has missing cells")
    mask = load_mask(cfg.path("mask", must_exist=True), truth.n_features)
    if mask.shape != truth.values.shape:
        raise ShapeError(f"mask shape {mask.shape} does not match ground truth {truth.values.shape}")
    return truth, mask


def cmd_eval(cfg: RunConfig) -> dict:
    truth, mask = _load_truth_and_mask(cfg)
    completed = load_csv(cfg.path("completed", must_exist=True))
    if completed.values.shape != truth.values.shape:
        raise ShapeError(f"completed shape {completed.values.shape} does not match ground truth {truth.values.shape}")
    report = _score(truth, completed.values, mask, cfg.tolerance)
    report_path = cfg.path("report")
    report_path.write_text(report.to_json() + "\n")
    Path(str(report_path) + ".txt").write_text(report.to_text())
    sys.stdout.write(report.to_text())
    return report.to_dict()


def cmd_bench(cfg: RunConfig) -> dict:
    truth, mask = _load_truth_and_mask(cfg)
    masked = load_csv(cfg.path("masked", must_exist=True))
    if masked.values.shape != truth.values.shape:
        raise ShapeError("masked data and ground truth differ in shape")
    if not np.array_equal(masked.mask, mask):
        raise NumericError("mask sidecar disagrees with the '?' cells of the masked data")
    model, stats, extra = _load_model_and_stats(cfg, masked.n_features)

    rows = []
    for method in BENCH_METHODS:
        if method.startswith("model+"):
            impute_cfg = replace(cfg.impute, optimizer=method.split("+")[1])
            completed, _ = _impute_normalized(model, stats, masked, impute_cfg, cfg.workers)
        else:
            normalized = stats.normalize(masked.values)
            if method == "mean":
                filled = mean_impute(normalized, mask)
            else:
                filled = knn_impute(normalized, mask, cfg.knn_k)
            completed = masked.values.copy()
            completed[mask] = stats.denormalize(filled)[mask]
        report = _score(truth, completed, mask, cfg.tolerance)
        rows.append({"method": method, **{k: v for k, v in report.to_dict().items() if k != "per_feature"}})
        log.info("bench %s: rmse %.5f", method, report.rmse)

    table = _format_table(rows)
    bench_path = cfg.path("bench")
    bench_path.write_text(table)
    _write_json(
        str(bench_path) + ".json",
        {"n_train_records": extra.get("n_train_records"), "missing_rate": missing_rate(mask), "methods": rows},
    )
    sys.stdout.write(table)
    return {"methods": rows}


def _fmt(v):
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _format_table(rows):
    cols = ["method", "n_imputed", "rmse", "mse", "pearson_r", "relative_accuracy"]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


HANDLERS = {"train": cmd_train, "inject": cmd_inject, "impute": cmd_impute, "eval": cmd_eval, "bench": cmd_bench}


def run_command(cmd: str, cfg: RunConfig) -> dict:
    if cmd not in HANDLERS:
        raise ConfigError(f"unknown command {cmd!r}")
    return HANDLERS[cmd](cfg)


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aeimpute", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
        p.add_argument("--workers", type=int, help="worker processes (overrides run.workers)")
        p.add_argument("--optimizer", choices=("ga", "pso", "mle"))
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config key")
        for key in PATH_KEYS:
            p.add_argument("--" + key.replace("_", "-"), dest="path_" + key, metavar="PATH")
    synth = sub.add_parser("synth", help="write the seven-feature correlated synthetic dataset")
    synth.add_argument("--rows", type=int, default=500)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--noise", type=float, default=0.01)
    synth.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            values = datasets.correlated(args.rows, seed=args.seed, noise=args.noise)
            save_csv(Dataset([f"X{j + 1}" for j in range(values.shape[1])], values), args.out)
            return 0
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["run.seed"] = str(args.seed)
        if args.workers is not None:
            overrides["run.workers"] = str(args.workers)
        if args.optimizer is not None:
            overrides["run.optimizer"] = args.optimizer
        for key in PATH_KEYS:
            value = getattr(args, "path_" + key)
            if value is not None:
                overrides["paths." + key] = value
        cfg = read_config(args.config, overrides)
        run_command(args.command, cfg)
        return 0
    except AEImputeError as exc:
        print(f"aeimpute {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"aeimpute {args.command}: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"aeimpute {args.command}: unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
