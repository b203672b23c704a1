"""Posterior sampling of edge weights and total causal effects.

Conditionally on a DAG, the rows of the edge-weight matrix B are
independent under the conjugate prior: the error precision q_i is Gamma
distributed and the coefficient row is Gaussian given q_i, with parameters
read off blocks of the posterior scale matrix (parents ordered ascending,
the node itself last).  Total effects follow as A = (I - B)^-1, which a
topological forward substitution evaluates with exact zeros for
non-ancestor pairs.  Setting rows of B to zero before inverting yields
effects under joint interventions on those variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .dataio import BgeHyper, DataMatrix, PosteriorStats, posterior_stats
from .errors import CyclicSupport, SingularBlock
from .graphs import Dag


@dataclass(frozen=True)
class RowPosterior:
    """Sampling parameters of one node's coefficient row and precision."""

    node: int
    parents: tuple
    mean: np.ndarray
    precision_scale: np.ndarray
    gamma_shape: float
    gamma_rate: float
    dof: float

    def __post_init__(self):
        if self.gamma_rate <= 0 or self.dof <= 0:
            raise SingularBlock(
                f"node {self.node}: nonpositive posterior scale (rate={self.gamma_rate})"
            )


@dataclass(frozen=True)
class LinearDagParams:
    """Edge weights b_mat[i, j] (edge j -> i) and error precisions."""

    b_mat: np.ndarray
    q_diag: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b_mat, dtype=np.float64)
        q = np.asarray(self.q_diag, dtype=np.float64)
        object.__setattr__(self, "b_mat", b)
        object.__setattr__(self, "q_diag", q)
        n = b.shape[0]
        if b.shape != (n, n) or q.shape != (n,):
            raise ValueError("b_mat must be square and q_diag of matching length")
        if (q <= 0).any():
            raise ValueError("error precisions must be positive")
        _support_order(b)  # raises CyclicSupport


@dataclass(frozen=True)
class EffectMatrix:
    """a_mat[i, j] is the total causal effect of variable j on i."""

    a_mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_mat, dtype=np.float64)
        object.__setattr__(self, "a_mat", a)
        if not np.allclose(np.diag(a), 1.0):
            raise ValueError("diagonal of an effect matrix must be 1")


def _support_order(b: np.ndarray) -> list:
    """Topological order of the nonzero pattern of b (rows = children)."""
    n = b.shape[0]
    parents = [set(np.nonzero(b[i])[0]) for i in range(n)]
    placed: set = set()
    order = []
    remaining = set(range(n))
    while remaining:
        layer = [i for i in remaining if parents[i] <= placed]
        if not layer:
            raise CyclicSupport(f"coefficient support has a cycle among {sorted(remaining)}")
        order.extend(sorted(layer))
        placed.update(layer)
        remaining.difference_update(layer)
    return order


def row_posterior(i: int, parents, stats: PosteriorStats) -> RowPosterior:
    """Posterior of node i's coefficient row given its parent set.

    With R11 the parent block, R12 the parent-to-node column and R22 the
    node's diagonal entry of the posterior scale matrix: the location is
    R11^-1 R12, the precision of the row scales R11 by the sampled q_i,
    and q_i is Gamma with shape (dof)/2 and rate (R22 - R21 R11^-1 R12)/2,
    where dof = alpha_w' - n + |parents| + 1.
    """
    parents = tuple(sorted(int(j) for j in parents))
    if i in parents:
        raise ValueError(f"node {i} cannot parent itself")
    r = stats.r_mat
    n = stats.n
    l = len(parents) + 1
    dof = stats.alpha_w_post - n + l
    idx = list(parents)
    r11 = r[np.ix_(idx, idx)]
    r12 = r[idx, i]
    r22 = float(r[i, i])
    if parents:
        try:
            chol = np.linalg.cholesky(r11)
        except np.linalg.LinAlgError:
            raise SingularBlock(f"node {i}: parent block is singular") from None
        half = solve_triangular(chol, r12, lower=True)
        mean = solve_triangular(chol.T, half, lower=False)
        schur = r22 - float(half @ half)
    else:
        mean = np.zeros(0)
        schur = r22
    return RowPosterior(i, parents, mean, r11, 0.5 * dof, 0.5 * schur, dof)


def sample_row(rp: RowPosterior, rng) -> tuple[np.ndarray, float]:
    """Draw (coefficient row, error precision) from the row posterior.

    q is Gamma(shape, rate); given q the row is Gaussian with mean
    rp.mean and precision q * R11, realized through the Cholesky factor of
    R11.  Marginally the row follows the t distribution with ``dof``
    degrees of freedom.
    """
    q = rng.gamma(rp.gamma_shape, 1.0 / rp.gamma_rate)
    k = len(rp.parents)
    if k == 0:
        return np.zeros(0), float(q)
    chol = np.linalg.cholesky(rp.precision_scale)
    z = rng.standard_normal(k)
    dev = solve_triangular(chol.T, z, lower=False)
    return rp.mean + dev / math.sqrt(q), float(q)


def effects(params: LinearDagParams) -> EffectMatrix:
    """Total effects A = (I - B)^-1 by forward substitution in topological
    order; entries of non-ancestor pairs come out exactly zero."""
    b = params.b_mat
    n = b.shape[0]
    order = _support_order(b)
    a = np.zeros((n, n))
    for i in order:
        row = a[i]
        row[i] = 1.0
        for j in np.nonzero(b[i])[0]:
            row += b[i, j] * a[j]
    return EffectMatrix(a)


def joint_effects(params: LinearDagParams, intervened) -> EffectMatrix:
    """Effects when all ``intervened`` variables are set simultaneously:
    coefficients into intervened variables are zeroed before inverting."""
    b = params.b_mat.copy()
    for i in intervened:
        b[int(i), :] = 0.0
    return effects(LinearDagParams(b, params.q_diag))


def sample_params(g: Dag, stats: PosteriorStats, rng) -> LinearDagParams:
    """Draw edge weights and precisions for one DAG, row by row."""
    n = g.n
    b = np.zeros((n, n))
    q = np.zeros(n)
    for i in range(n):
        rp = row_posterior(i, g.parent_sets[i], stats)
        row, q_i = sample_row(rp, rng)
        for pos, j in enumerate(rp.parents):
            b[i, j] = row[pos]
        q[i] = q_i
    return LinearDagParams(b, q)


def run_beeps(dags, d: DataMatrix, h: BgeHyper | None = None, rng=None, intervened=()) -> list:
    """One effect matrix per input DAG.

    The posterior statistics are computed once; every DAG then gets an
    independent draw of its rows, mapped to total effects (optionally
    under a joint intervention).
    """
    if h is None:
        h = BgeHyper.default(d.n_variables)
    if rng is None:
        rng = np.random.default_rng()
    stats = posterior_stats(d, h)
    out = []
    for s, g in enumerate(dags):
        try:
            params = sample_params(g, stats, rng)
        except SingularBlock as exc:
            raise SingularBlock(f"dag {s}: {exc}") from None
        if intervened:
            out.append(joint_effects(params, intervened))
        else:
            out.append(effects(params))
    return out


def ancestor_posterior(dags) -> np.ndarray:
    """Entry (j, i): fraction of the DAGs in which i is an ancestor of j."""
    if not dags:
        raise ValueError("need at least one DAG")
    n = dags[0].n
    counts = np.zeros((n, n))
    for g in dags:
        for j, mask in enumerate(g.ancestor_masks()):
            while mask:
                b = mask & -mask
                counts[j, b.bit_length() - 1] += 1.0
                mask ^= b
    return counts / len(dags)


def effect_summary(mats, quantiles=(0.05, 0.95)) -> dict:
    """Posterior mean and quantiles of every ordered pair's effect."""
    stack = np.stack([m.a_mat for m in mats])
    lo, hi = quantiles
    return {
        "mean": stack.mean(axis=0),
        "q_lo": np.quantile(stack, lo, axis=0),
        "q_hi": np.quantile(stack, hi, axis=0),
    }
