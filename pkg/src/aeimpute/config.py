"""Run configuration: a sectioned INI file plus command-line overrides.

Every key except the file paths and ``run.seed`` has a default, listed in
``DEFAULTS``.  Override any key on the command line with
``--set section.key=value``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import AEImputeError, ConfigError
from .impute import ImputeConfig
from .missingness import MechanismSpec, PatternSpec
from .net import TrainConfig
from .optimize import GAConfig, GDConfig, PSOConfig

DEFAULTS = {
    "run": {"workers": "1", "optimizer": "ga"},
    "train": {
        "hidden_sizes": "5,3",
        "learning_rate": "1.0",
        "epochs": "200",
        "batch_size": "10",
        "corruption": "0.1",
        "init_scale": "",
        "pretrain": "false",
        "tied": "false",
        "denoising": "false",
    },
    "mechanism": {
        "kind": "MCAR",
        "targets": "",
        "rate": "0.2",
        "intercept": "0.0",
        "slopes": "",
        "drivers": "",
    },
    "pattern": {"kind": "arbitrary", "order": ""},
    "impute": {"restarts": "3", "accept_threshold": ""},
    "ga": {
        "population": "50",
        "generations": "100",
        "tournament_size": "3",
        "crossover_rate": "0.9",
        "mutation_rate": "0.1",
        "blend_alpha": "0.5",
        "mutation_sigma": "0.1",
        "elitism": "1",
    },
    "pso": {
        "swarm": "30",
        "iterations": "200",
        "inertia": "0.729",
        "cognitive": "1.49445",
        "social": "1.49445",
        "velocity_clamp": "0.5",
    },
    "mle": {"step": "0.1", "max_iters": "500", "grad_tol": "1e-6"},
    "eval": {"tolerance": "0.1", "knn_k": "5"},
}

PATH_KEYS = (
    "train_data",
    "ground_truth",
    "masked",
    "mask",
    "model",
    "train_log",
    "completed",
    "impute_log",
    "report",
    "bench",
)

STAGES = {"train": 0, "inject": 1, "impute": 2, "bench": 3}


def stage_seed(master: int, stage: str) -> int:
    """Seed for one pipeline stage, derived from the master seed."""
    ss = np.random.SeedSequence(int(master), spawn_key=(STAGES[stage],))
    return int(ss.generate_state(1, np.uint64)[0])


def _ints(text):
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _floats(text):
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    seed: int
    workers: int
    optimizer: str
    paths: dict
    train: TrainConfig
    denoising: bool
    mechanism: MechanismSpec
    pattern: PatternSpec
    impute: ImputeConfig
    tolerance: float
    knn_k: int
    source: Optional[str] = None
    raw: dict = field(default_factory=dict)

    def path(self, key: str, must_exist: bool = False) -> Path:
        value = self.paths.get(key)
        if not value:
            raise ConfigError(f"missing required path 'paths.{key}'")
        p = Path(value)
        if must_exist and not p.exists():
            raise ConfigError(f"paths.{key}: file {p} does not exist")
        return p


def read_config(path=None, overrides=None) -> RunConfig:
    """Parse a config file (optional) and ``section.key -> value`` overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    try:
        return _build(raw, source=str(path) if path else None)
    except AEImputeError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _build(raw, source):
    run = raw["run"]
    if not run.get("seed", "").strip():
        raise ConfigError("run.seed is required (no default)")
    seed = int(run["seed"])
    if not 0 <= seed < 2**64:
        raise ConfigError("run.seed must be an unsigned 64-bit integer")
    unknown = set(raw.get("paths", {})) - set(PATH_KEYS)
    if unknown:
        raise ConfigError(f"unknown path keys: {sorted(unknown)}")

    t = raw["train"]
    train = TrainConfig(
        hidden_sizes=_ints(t["hidden_sizes"]),
        learning_rate=float(t["learning_rate"]),
        epochs=int(t["epochs"]),
        batch_size=int(t["batch_size"]),
        corruption=float(t["corruption"]),
        init_scale=float(t["init_scale"]) if t["init_scale"].strip() else None,
        seed=stage_seed(seed, "train"),
        pretrain=_bool(t["pretrain"]),
        tied=_bool(t["tied"]),
    )

    m = raw["mechanism"]
    mechanism = MechanismSpec(
        kind=m["kind"],
        targets=_ints(m["targets"]) or None,
        rate=float(m["rate"]),
        intercept=float(m["intercept"]),
        slopes=_floats(m["slopes"]),
        drivers=_ints(m["drivers"]),
    )
    p = raw["pattern"]
    pattern = PatternSpec(kind=p["kind"], order=_ints(p["order"]) or None)

    g, s, d = raw["ga"], raw["pso"], raw["mle"]
    ga = GAConfig(
        population=int(g["population"]),
        generations=int(g["generations"]),
        tournament_size=int(g["tournament_size"]),
        crossover_rate=float(g["crossover_rate"]),
        mutation_rate=float(g["mutation_rate"]),
        blend_alpha=float(g["blend_alpha"]),
        mutation_sigma=float(g["mutation_sigma"]),
        elitism=int(g["elitism"]),
    )
    pso = PSOConfig(
        swarm=int(s["swarm"]),
        iterations=int(s["iterations"]),
        inertia=float(s["inertia"]),
        cognitive=float(s["cognitive"]),
        social=float(s["social"]),
        velocity_clamp=float(s["velocity_clamp"]),
    )
    mle = GDConfig(step=float(d["step"]), max_iters=int(d["max_iters"]), grad_tol=float(d["grad_tol"]))
    i = raw["impute"]
    impute = ImputeConfig(
        optimizer=run["optimizer"],
        ga=ga,
        pso=pso,
        mle=mle,
        restarts=int(i["restarts"]),
        accept_threshold=float(i["accept_threshold"]) if i["accept_threshold"].strip() else None,
        seed=stage_seed(seed, "impute"),
    )
    e = raw["eval"]
    tolerance = float(e["tolerance"])
    if not tolerance > 0:
        raise ConfigError("eval.tolerance must be positive")
    knn_k = int(e["knn_k"])
    if knn_k < 1:
        raise ConfigError("eval.knn_k must be at least 1")
    workers = int(run["workers"])
    if workers < 1:
        raise ConfigError("run.workers must be at least 1")
    return RunConfig(
        seed=seed,
        workers=workers,
        optimizer=impute.optimizer,
        paths=dict(raw.get("paths", {})),
        train=train,
        denoising=_bool(t["denoising"]),
        mechanism=mechanism,
        pattern=pattern,
        impute=impute,
        tolerance=tolerance,
        knn_k=knn_k,
        source=source,
        raw=raw,
    )
