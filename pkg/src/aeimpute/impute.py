"""Fill missing cells by searching for the values the trained autoencoder reconstructs best.

For one record, known cells are clamped and the missing cells are the free
variables of the record objective ``||x - z(x)||^2`` taken over all features.
An attempt whose objective is at or below the acceptance threshold is
accepted; otherwise the search reruns with a freshly derived seed until the
restart budget is spent, and the best attempt wins.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, NothingToImputeError, ShapeError
from .net import NetworkParams, grad_input, reconstruct
from .optimize import (
    GAConfig,
    GDConfig,
    ObjectiveHandle,
    PSOConfig,
    ga_minimize,
    mle_minimize,
    pso_minimize,
)

log = logging.getLogger(__name__)

PLACEHOLDER = 0.5
OPTIMIZERS = ("ga", "pso", "mle")


@dataclass
class RecordView:
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        self.missing = np.unique(np.asarray(self.missing, dtype=int))
        d = self.values.shape[0]
        if self.missing.size and (self.missing.min() < 0 or self.missing.max() >= d):
            raise ShapeError("missing index out of range")
        self.values[self.missing] = PLACEHOLDER
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("known values must be finite")

    @classmethod
    def from_row(cls, row, missing_row) -> "RecordView":
        return cls(row, np.flatnonzero(np.asarray(missing_row, dtype=bool)))

    @property
    def known(self) -> np.ndarray:
        keep = np.ones(self.values.shape[0], dtype=bool)
        keep[self.missing] = False
        return np.flatnonzero(keep)


@dataclass
class ImputeConfig:
    optimizer: str = "ga"
    ga: GAConfig = field(default_factory=GAConfig)
    pso: PSOConfig = field(default_factory=PSOConfig)
    mle: GDConfig = field(default_factory=GDConfig)
    restarts: int = 3
    accept_threshold: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        self.optimizer = self.optimizer.lower()
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected one of {OPTIMIZERS}")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.accept_threshold is not None and not self.accept_threshold > 0:
            raise ConfigError("accept_threshold must be positive")

    def threshold_for(self, model: NetworkParams) -> float:
        """Explicit threshold, else twice the model's final training loss, else accept all."""
        if self.accept_threshold is not None:
            return self.accept_threshold
        if model.final_loss is not None and model.final_loss > 0:
            return 2.0 * model.final_loss
        return float("inf")


@dataclass
class ImputationResult:
    filled: np.ndarray
    objective: float
    attempts: int
    accepted: bool
    index: int = 0
    attempt_objectives: list = field(default_factory=list)


def derive_seed(master: int, record_index: int, attempt: int) -> int:
    """Counter-based seed for one (record, attempt) pair, independent of scheduling."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(record_index), int(attempt)))
    return int(ss.generate_state(1, np.uint64)[0])


def objective_for_record(model: NetworkParams, rec: RecordView) -> ObjectiveHandle:
    if rec.missing.size == 0:
        raise NothingToImputeError("record has no missing cells")
    if rec.values.shape[0] != model.input_dim:
        raise ShapeError(f"record has {rec.values.shape[0]} features, model expects {model.input_dim}")
    base = rec.values.copy()
    base.setflags(write=False)
    slots = rec.missing.copy()

    def fill(u):
        x = base.copy()
        x[slots] = u
        return x

    def func(u):
        x = fill(u)
        return float(np.sum((x - reconstruct(model, x)) ** 2))

    def batch(U):
        X = np.tile(base, (U.shape[0], 1))
        X[:, slots] = U
        return np.sum((X - reconstruct(model, X)) ** 2, axis=1)

    def gradient(u):
        return grad_input(model, fill(u), slots)

    return ObjectiveHandle.unit_box(func, slots.size, gradient=gradient, batch=batch)


def _run_optimizer(obj, cfg: ImputeConfig, seed: int):
    if cfg.optimizer == "ga":
        return ga_minimize(obj, replace(cfg.ga, seed=seed))
    if cfg.optimizer == "pso":
        return pso_minimize(obj, replace(cfg.pso, seed=seed))
    return mle_minimize(obj, replace(cfg.mle, seed=seed))


def impute_record(
    model: NetworkParams, rec: RecordView, cfg: Optional[ImputeConfig] = None, record_index: int = 0
) -> ImputationResult:
    cfg = cfg or ImputeConfig()
    obj = objective_for_record(model, rec)
    threshold = cfg.threshold_for(model)
    best = None
    scores = []
    for attempt in range(cfg.restarts):
        res = _run_optimizer(obj, cfg, derive_seed(cfg.seed, record_index, attempt))
        filled = rec.values.copy()
        filled[rec.missing] = res.x_star
        value = obj(res.x_star)
        scores.append(value)
        if best is None or value < best[1]:
            best = (filled, value)
        if value <= threshold:
            break
    filled, value = best
    return ImputationResult(
        filled=filled,
        objective=value,
        attempts=len(scores),
        accepted=value <= threshold,
        index=record_index,
        attempt_objectives=scores,
    )


def _impute_rows(model, rows, masks, indices, cfg):
    return [
        impute_record(model, RecordView.from_row(row, m), cfg, int(i))
        for row, m, i in zip(rows, masks, indices)
    ]


def impute_dataset(model: NetworkParams, data, mask, cfg: Optional[ImputeConfig] = None, workers: int = 1):
    """Impute every incomplete record of a normalized matrix.

    Returns ``(completed, results)`` with one result per incomplete record, in
    record order.  Output does not depend on ``workers``.
    """
    cfg = cfg or ImputeConfig()
    data = np.asarray(data, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if data.shape != mask.shape or data.ndim != 2:
        raise ShapeError(f"data shape {data.shape} does not match mask shape {mask.shape}")
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    completed = data.copy()
    todo = np.flatnonzero(mask.any(axis=1))
    if todo.size == 0:
        return completed, []

    if workers == 1 or todo.size == 1:
        results = _impute_rows(model, data[todo], mask[todo], todo, cfg)
    else:
        chunks = [c for c in np.array_split(todo, min(workers * 4, todo.size)) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_impute_rows, model, data[c], mask[c], c, cfg) for c in chunks]
            results = [r for fut in futures for r in fut.result()]

    for res in results:
        completed[res.index] = res.filled
    n_rejected = sum(not r.accepted for r in results)
    if n_rejected:
        log.info("%d of %d records imputed without meeting the acceptance threshold", n_rejected, len(results))
    return completed, results
