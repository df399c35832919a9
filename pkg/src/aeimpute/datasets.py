"""Bundled and synthetic datasets."""

from importlib import resources

import numpy as np

# rows: features 4..7 as affine maps of features 1..3
_MIX = np.array(
    [
        [0.5, 0.3, 0.2],
        [0.2, -0.4, 0.6],
        [-0.3, 0.5, 0.4],
        [0.6, 0.2, -0.5],
    ]
)
_OFFSET = np.array([0.0, 0.4, 0.2, 0.3])


def correlated(n_records: int = 500, seed: int = 0, noise: float = 0.01) -> np.ndarray:
    """Seven-feature synthetic matrix with three free features.

    Features 1-3 are uniform on [0, 1]; features 4-7 are fixed affine
    combinations of them plus Gaussian noise of standard deviation ``noise``.
    """
    rng = np.random.default_rng(seed)
    free = rng.uniform(0.0, 1.0, size=(n_records, 3))
    dependent = free @ _MIX.T + _OFFSET + rng.normal(0.0, noise, size=(n_records, 4))
    return np.hstack([free, dependent])


def table1_path():
    """Path to the nine-record, seven-feature sample table with ``?`` markers."""
    return resources.files("aeimpute") / "data" / "table1.csv"
