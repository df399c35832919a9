"""Ground-truth scoring of imputations and the mean / kNN baseline imputers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateColumnError, InsufficientDonorsError, ShapeError

DEFAULT_TOLERANCE = 0.1


@dataclass
class MetricReport:
    """Scores over the originally-missing cells.

    ``pearson_r`` is ``None`` when either vector is constant.
    """

    n_imputed: int
    mse: float
    rmse: float
    sse: float
    pearson_r: Optional[float]
    relative_accuracy: float
    tolerance: float
    per_feature: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_text(self) -> str:
        lines = [
            f"n_imputed={self.n_imputed}",
            f"mse={self.mse!r}",
            f"rmse={self.rmse!r}",
            f"sse={self.sse!r}",
            f"pearson_r={'undefined' if self.pearson_r is None else repr(self.pearson_r)}",
            f"relative_accuracy={self.relative_accuracy!r}",
            f"tolerance={self.tolerance!r}",
        ]
        for name, sub in self.per_feature.items():
            for key in ("n_imputed", "mse", "rmse", "relative_accuracy"):
                lines.append(f"{name}.{key}={sub[key]!r}")
        return "\n".join(lines) + "\n"


def pearson(a, b) -> Optional[float]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        return None
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))


def _core(truth, imputed, tau):
    diff = imputed - truth
    mse = float(np.mean(diff**2))
    return {
        "n_imputed": int(truth.size),
        "mse": mse,
        "rmse": float(np.sqrt(mse)),
        "relative_accuracy": float(np.mean(np.abs(diff) <= tau)),
    }


def score(truth, imputed, tau: float = DEFAULT_TOLERANCE, features=None, feature_names=None) -> MetricReport:
    """Score imputed values against ground truth.

    ``features`` optionally gives the column index of each cell, enabling the
    per-feature breakdown.
    """
    truth = np.asarray(truth, dtype=float).ravel()
    imputed = np.asarray(imputed, dtype=float).ravel()
    if truth.shape != imputed.shape:
        raise ShapeError(f"length mismatch: {truth.size} vs {imputed.size}")
    if truth.size == 0:
        raise ShapeError("nothing to score")
    if not tau > 0:
        raise ShapeError("tolerance must be positive")
    core = _core(truth, imputed, tau)
    per_feature = {}
    if features is not None:
        features = np.asarray(features, dtype=int).ravel()
        for j in np.unique(features):
            sel = features == j
            name = feature_names[j] if feature_names is not None else f"f{j}"
            per_feature[name] = _core(truth[sel], imputed[sel], tau)
    return MetricReport(
        n_imputed=core["n_imputed"],
        mse=core["mse"],
        rmse=core["rmse"],
        sse=float(np.sum((imputed - truth) ** 2)),
        pearson_r=pearson(truth, imputed),
        relative_accuracy=core["relative_accuracy"],
        tolerance=float(tau),
        per_feature=per_feature,
    )


def score_masked(truth, completed, mask, tau: float = DEFAULT_TOLERANCE, feature_names=None) -> MetricReport:
    """Score only the cells flagged in ``mask``."""
    truth = np.asarray(truth, dtype=float)
    completed = np.asarray(completed, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if not truth.shape == completed.shape == mask.shape:
        raise ShapeError("truth, completed and mask must share a shape")
    cols = np.nonzero(mask)[1]
    return score(truth[mask], completed[mask], tau, features=cols, feature_names=feature_names)


def _check(data, mask):
    data = np.asarray(data, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if data.shape != mask.shape or data.ndim != 2:
        raise ShapeError(f"data shape {data.shape} does not match mask shape {mask.shape}")
    return data, mask


def mean_impute(data, mask):
    data, mask = _check(data, mask)
    out = data.copy()
    for j in np.flatnonzero(mask.any(axis=0)):
        observed = data[~mask[:, j], j]
        if observed.size == 0:
            raise DegenerateColumnError(f"column {j} has no observed values")
        out[mask[:, j], j] = observed.mean()
    return out


def shared_distance(a, b, obs_a, obs_b) -> float:
    """Euclidean distance over jointly observed coordinates, as a root-mean-square.

    Infinite when the two records share no observed coordinate.
    """
    both = obs_a & obs_b
    n = int(both.sum())
    if n == 0:
        return float("inf")
    return float(np.sqrt(np.sum((a[both] - b[both]) ** 2) / n))


def knn_impute(data, mask, k: int = 5):
    """Fill each missing cell with the mean of its ``k`` nearest donors that observe that cell.

    Ties in distance go to the lower record index.
    """
    data, mask = _check(data, mask)
    if k < 1:
        raise ShapeError("k must be at least 1")
    observed = ~mask
    filled = np.where(mask, 0.0, data)
    out = data.copy()
    n = data.shape[0]
    for i in np.flatnonzero(mask.any(axis=1)):
        # squared differences over jointly observed coordinates, for every other record
        both = observed & observed[i]
        shared = both.sum(axis=1)
        sq = np.where(both, (filled - filled[i]) ** 2, 0.0).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(shared > 0, np.sqrt(sq / np.maximum(shared, 1)), np.inf)
        dist[i] = np.nan
        for j in np.flatnonzero(mask[i]):
            donors = np.flatnonzero(observed[:, j] & (np.arange(n) != i))
            if donors.size < k:
                raise InsufficientDonorsError(
                    f"record {i} feature {j}: {donors.size} donors observe it, need {k}"
                )
            # lexsort keys: last is primary
            ranked = donors[np.lexsort((donors, dist[donors]))]
            out[i, j] = data[ranked[:k], j].mean()
    return out
