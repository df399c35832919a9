"""Missingness simulation: MCAR / MAR / MNAR mechanisms with arbitrary or monotone patterns.

Masks are boolean ``(n_records, n_features)`` arrays with ``True`` marking a
missing cell.  Masked datasets carry ``NaN`` in missing cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericError, ShapeError

MCAR = "MCAR"
MAR = "MAR"
MNAR = "MNAR"
MECHANISMS = (MCAR, MAR, MNAR)

ARBITRARY = "arbitrary"
MONOTONE = "monotone"
PATTERNS = (ARBITRARY, MONOTONE)


@dataclass
class MechanismSpec:
    """How missingness is drawn.

    MCAR uses ``rate``.  MAR uses ``intercept`` and one slope per entry of
    ``drivers``; MNAR uses ``intercept`` and a single slope applied to the
    target's own (min-max normalized) value.  ``targets=None`` targets every
    feature.
    """

    kind: str = MCAR
    targets: Optional[Sequence[int]] = None
    rate: float = 0.1
    intercept: float = 0.0
    slopes: Sequence[float] = ()
    drivers: Sequence[int] = ()

    def __post_init__(self):
        self.kind = self.kind.upper()
        if self.kind not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {self.kind!r}; expected one of {MECHANISMS}")
        if self.targets is not None:
            self.targets = tuple(int(t) for t in self.targets)
        self.drivers = tuple(int(d) for d in self.drivers)
        self.slopes = tuple(float(b) for b in np.atleast_1d(self.slopes))
        if self.kind == MCAR and not 0.0 < self.rate < 1.0:
            raise ConfigError(f"MCAR rate must lie in (0, 1), got {self.rate}")
        if self.kind == MAR:
            if not self.drivers:
                raise ConfigError("MAR needs at least one driver feature")
            if len(self.slopes) != len(self.drivers):
                raise ConfigError("MAR needs exactly one slope per driver feature")
            if self.targets is not None and set(self.targets) & set(self.drivers):
                raise ConfigError("MAR driver features must not overlap the targets")
        if self.kind == MNAR:
            if self.drivers:
                raise ConfigError("MNAR takes no driver features")
            if len(self.slopes) != 1:
                raise ConfigError("MNAR needs exactly one slope")

    def resolve_targets(self, n_features: int) -> np.ndarray:
        if self.targets is None:
            targets = [j for j in range(n_features) if j not in self.drivers]
        else:
            targets = list(self.targets)
        for j in list(targets) + list(self.drivers):
            if not 0 <= j < n_features:
                raise ConfigError(f"feature index {j} out of range for {n_features} features")
        if not targets:
            raise ConfigError("no target features")
        return np.array(sorted(set(targets)), dtype=int)


@dataclass
class PatternSpec:
    kind: str = ARBITRARY
    order: Optional[Sequence[int]] = None

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in PATTERNS:
            raise ConfigError(f"unknown pattern {self.kind!r}; expected one of {PATTERNS}")
        if self.order is not None:
            self.order = tuple(int(j) for j in self.order)

    def resolve_order(self, n_features: int) -> np.ndarray:
        order = np.arange(n_features) if self.order is None else np.array(self.order, dtype=int)
        _check_permutation(order, n_features)
        return order


def _check_permutation(order, n_features):
    if sorted(int(j) for j in order) != list(range(n_features)):
        raise ConfigError(f"order {list(order)} is not a permutation of 0..{n_features - 1}")


def _minmax(data: np.ndarray) -> np.ndarray:
    lo = data.min(axis=0)
    span = data.max(axis=0) - lo
    out = np.full(data.shape, 0.5)
    ok = span > 0
    out[:, ok] = (data[:, ok] - lo[ok]) / span[ok]
    return out


def sample_mcar(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(rate) mask; accepts the closed interval [0, 1]."""
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"rate {rate} outside [0, 1]")
    return rng.random(shape) < rate


def missing_probabilities(dataset, mech: MechanismSpec) -> np.ndarray:
    """Per-cell probability of going missing under ``mech`` (zero off-target)."""
    data = np.asarray(dataset, dtype=float)
    n, d = data.shape
    targets = mech.resolve_targets(d)
    prob = np.zeros((n, d))
    if mech.kind == MCAR:
        prob[:, targets] = mech.rate
    elif mech.kind == MAR:
        drivers = _minmax(data[:, list(mech.drivers)])
        per_record = expit(mech.intercept + drivers @ np.array(mech.slopes))
        prob[:, targets] = per_record[:, None]
    else:
        own = _minmax(data[:, targets])
        prob[:, targets] = expit(mech.intercept + mech.slopes[0] * own)
    return prob


def close_monotone(mask: np.ndarray, order) -> np.ndarray:
    """Propagate missingness to every later feature in ``order``."""
    mask = np.asarray(mask, dtype=bool)
    order = np.asarray(order, dtype=int)
    _check_permutation(order, mask.shape[1])
    out = mask.copy()
    out[:, order] = np.logical_or.accumulate(mask[:, order], axis=1)
    return out


def inject(dataset, mech: MechanismSpec, pattern: Optional[PatternSpec] = None, seed: int = 0):
    """Return ``(masked_copy, mask)``; the input array is never modified."""
    data = np.asarray(dataset, dtype=float)
    if data.ndim != 2:
        raise ShapeError("dataset must be a 2-D matrix")
    if np.any(np.isnan(data)):
        raise NumericError("cannot inject missingness into a dataset that already has missing cells")
    pattern = pattern or PatternSpec()
    order = pattern.resolve_order(data.shape[1]) if pattern.kind == MONOTONE else None
    rng = np.random.default_rng(seed)
    if data.shape[0] == 0:
        mask = np.zeros(data.shape, dtype=bool)
    else:
        mask = rng.random(data.shape) < missing_probabilities(data, mech)
    if order is not None:
        mask = close_monotone(mask, order)
    masked = data.copy()
    masked[mask] = np.nan
    return masked, mask


def validate_monotone(mask, order=None) -> bool:
    """True iff every record observing a feature also observes all features before it in ``order``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ShapeError("mask must be 2-D")
    order = np.arange(mask.shape[1]) if order is None else np.asarray(order, dtype=int)
    _check_permutation(order, mask.shape[1])
    ordered = mask[:, order].astype(np.int8)
    return bool(np.all(np.diff(ordered, axis=1) >= 0))


def missing_rate(mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    return float(mask.mean()) if mask.size else 0.0
