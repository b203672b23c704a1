"""Input-validation helpers shared by the estimator API and the CLI."""

from __future__ import annotations

import numpy as np

from .dataio import DataMatrix


def check_data(X, columns=None) -> DataMatrix:
    """Coerce array-likes (or pandas frames) into a validated DataMatrix."""
    if isinstance(X, DataMatrix):
        return X
    if hasattr(X, "values") and hasattr(X, "columns"):
        return DataMatrix.from_array(
            np.asarray(X.values, dtype=np.float64), [str(c) for c in X.columns]
        )
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
    return DataMatrix.from_array(arr, columns)


def check_random_state(seed) -> np.random.Generator:
    """Pass Generators through, seed everything else."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
