"""Observation matrices, prior hyperparameters, and posterior statistics.

The Gaussian model places a normal prior on the mean (precision scaled by
``alpha_mu``) and a Wishart prior on the precision matrix (inverse scale
``t_mat``, degrees of freedom ``alpha_w``).  Conditioning on N observations
updates the inverse scale to

    R = T + S_N + alpha_mu*N/(alpha_mu+N) * (nu - xbar)(nu - xbar)^T

with ``S_N`` the centered scatter matrix, and shifts both equivalent sample
sizes by N.  Everything downstream (local scores, coefficient posteriors)
is a function of these statistics alone.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumn, MissingFile, NonNumericCell, NumericFailure, RaggedRows


@dataclass(frozen=True)
class DataMatrix:
    """An N x n matrix of real observations with named columns."""

    values: np.ndarray
    columns: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        if vals.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if not np.isfinite(vals).all():
            raise ValueError("all entries must be finite")
        n_rows, n_cols = vals.shape
        if n_rows < 1 or n_cols < 2:
            raise ValueError("need at least 1 row and 2 columns")
        if len(self.columns) != n_cols:
            raise ValueError("one name per column required")
        if len(set(self.columns)) != n_cols:
            raise ValueError("column names must be unique")
        vals.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_variables(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, columns=None) -> "DataMatrix":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if columns is None:
            columns = tuple(f"x{j + 1}" for j in range(values.shape[1]))
        return cls(values, tuple(columns))


@dataclass(frozen=True)
class BgeHyper:
    """Hyperparameters of the normal-Wishart prior."""

    alpha_mu: float
    alpha_w: float
    nu: np.ndarray
    t_mat: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=np.float64)
        t = np.asarray(self.t_mat, dtype=np.float64)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "t_mat", t)
        n = nu.shape[0]
        if self.alpha_mu <= 0:
            raise ValueError("alpha_mu must be positive")
        if self.alpha_w <= n - 1:
            raise ValueError(f"alpha_w must exceed n-1 = {n - 1}")
        if t.shape != (n, n):
            raise ValueError("t_mat must be n x n")
        if not np.allclose(t, t.T):
            raise ValueError("t_mat must be symmetric")
        try:
            np.linalg.cholesky(t)
        except np.linalg.LinAlgError:
            raise ValueError("t_mat must be positive definite") from None
        nu.flags.writeable = False
        t.flags.writeable = False

    @classmethod
    def default(cls, n: int) -> "BgeHyper":
        """alpha_mu = 1, alpha_w = n + 2, T = I/2, nu = 0."""
        return cls(1.0, float(n + 2), np.zeros(n), 0.5 * np.eye(n))


@dataclass(frozen=True)
class PosteriorStats:
    """Updated normal-Wishart parameters after conditioning on the data."""

    r_mat: np.ndarray
    alpha_w_post: float
    alpha_mu_post: float
    nu_post: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_mat, dtype=np.float64)
        object.__setattr__(self, "r_mat", r)
        object.__setattr__(self, "nu_post", np.asarray(self.nu_post, dtype=np.float64))
        if not np.allclose(r, r.T):
            raise ValueError("r_mat must be symmetric")
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError:
            raise NumericFailure("posterior scale matrix is not positive definite") from None
        r.flags.writeable = False
        self.nu_post.flags.writeable = False

    @property
    def n(self) -> int:
        return self.r_mat.shape[0]


def load_csv(path, header: bool = True) -> DataMatrix:
    """Parse a comma-delimited numeric file into a DataMatrix.

    With ``header`` the first line gives column names, otherwise names
    x1..xn are generated.  Malformed input raises RaggedRows or
    NonNumericCell with 1-based line/column positions.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise RaggedRows(1, 1, 0)
    columns = None
    start = 0
    if header:
        columns = tuple(name.strip() for name in rows[0])
        start = 1
    data = []
    width = len(columns) if columns is not None else (len(rows[start]) if len(rows) > start else 0)
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise RaggedRows(lineno, width, len(row))
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericCell(lineno, col, cell) from None
            if not math.isfinite(value):
                raise NonNumericCell(lineno, col, cell)
            parsed.append(value)
        data.append(parsed)
    if columns is None:
        columns = tuple(f"x{j + 1}" for j in range(width))
    return DataMatrix(np.asarray(data, dtype=np.float64), columns)


def save_csv(path, d: DataMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.columns)
        for row in d.values:
            writer.writerow([repr(float(v)) for v in row])


def standardize(d: DataMatrix) -> DataMatrix:
    """Scale each column to mean 0 and unit sample variance (ddof 1)."""
    mean = d.values.mean(axis=0)
    sd = d.values.std(axis=0, ddof=1) if d.n_samples > 1 else np.zeros(d.n_variables)
    for j, s in enumerate(sd):
        if s == 0.0 or not math.isfinite(s):
            raise ConstantColumn(j)
    return DataMatrix((d.values - mean) / sd, d.columns)


def posterior_stats(d: DataMatrix, h: BgeHyper) -> PosteriorStats:
    """Condition the normal-Wishart prior on the observations."""
    x = d.values
    n_obs = d.n_samples
    xbar = x.mean(axis=0)
    centered = x - xbar
    scatter = centered.T @ centered
    diff = h.nu - xbar
    shrink = h.alpha_mu * n_obs / (h.alpha_mu + n_obs)
    r = h.t_mat + scatter + shrink * np.outer(diff, diff)
    r = 0.5 * (r + r.T)
    nu_post = (h.alpha_mu * h.nu + n_obs * xbar) / (h.alpha_mu + n_obs)
    return PosteriorStats(r, h.alpha_w + n_obs, h.alpha_mu + n_obs, nu_post)
