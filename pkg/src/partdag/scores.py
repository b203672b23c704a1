"""Per-node local scores: structure prior times Gaussian marginal likelihood.

The local score of node i with parent set S factorizes as
``pi_i(S) = rho_i(S) * l_i(S)``.  The prior factor penalizes parent-set
size through the inverse binomial coefficient; the marginal likelihood is
the score-equivalent Gaussian one induced by the normal-Wishart prior,
evaluated as a ratio of block marginal likelihoods of the variable sets
S+{i} and S.  All scores live in log space; tables over a candidate set of
size K are bitmask-indexed arrays of length 2^K.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dataio import BgeHyper, DataMatrix, PosteriorStats, posterior_stats
from .errors import NumericFailure, SizeOutOfRange
from .lattice import MAX_GROUND_SET

LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class LocalScoreTable:
    """log pi_i(S) for every subset S of an ordered candidate list.

    ``log_scores[mask]`` scores the parent set {candidates[p] : bit p of
    mask set}.
    """

    node: int
    candidates: tuple
    log_scores: np.ndarray

    def __post_init__(self):
        cands = tuple(int(c) for c in self.candidates)
        object.__setattr__(self, "candidates", cands)
        scores = np.asarray(self.log_scores, dtype=np.float64)
        object.__setattr__(self, "log_scores", scores)
        k = len(cands)
        if self.node in cands or len(set(cands)) != k:
            raise ValueError("candidates must be distinct and exclude the node")
        if scores.shape != (1 << k,):
            raise ValueError(f"expected {1 << k} scores, got {scores.shape}")
        if np.isnan(scores).any() or (scores == np.inf).any():
            raise ValueError("scores must be finite or -inf")
        if not np.isfinite(scores[0]):
            raise ValueError("empty parent set must have a finite score")
        scores.flags.writeable = False

    @property
    def k(self) -> int:
        return len(self.candidates)


def log_dag_prior_factor(n: int, k: int) -> float:
    """-log C(n-1, k), the per-node structure prior for k parents."""
    if not 0 <= k <= n - 1:
        raise SizeOutOfRange(f"parent-set size {k} outside [0, {n - 1}]")
    return -math.log(math.comb(n - 1, k))


def _logdet_psd(mat: np.ndarray, idx: list) -> float:
    """Log-determinant of a principal submatrix via Cholesky."""
    if not idx:
        return 0.0
    sub = mat[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        raise NumericFailure(
            f"submatrix over {idx} is not positive definite"
        ) from None
    return 2.0 * float(np.log(np.diag(chol)).sum())


def bge_log_marginal(i: int, s, stats: PosteriorStats, h: BgeHyper, n_samples: int) -> float:
    """Gaussian log marginal likelihood of node i with parent set s.

    Computed as the ratio of the marginal data likelihoods of the variable
    blocks s+{i} and s.  Submatrices are taken with the parents in
    increasing order and i last; the result does not depend on that order
    but the convention fixes the blocks used elsewhere.
    """
    parents = sorted(int(j) for j in s)
    if i in parents:
        raise ValueError(f"node {i} cannot parent itself")
    n = stats.n
    big_n = float(n_samples)
    l = len(parents) + 1
    a = h.alpha_w - n + l
    y = parents + [int(i)]
    ld_t_y = _logdet_psd(h.t_mat, y)
    ld_r_y = _logdet_psd(stats.r_mat, y)
    ld_t_p = _logdet_psd(h.t_mat, parents)
    ld_r_p = _logdet_psd(stats.r_mat, parents)
    return (
        -0.5 * big_n * LOG_PI
        + 0.5 * (math.log(h.alpha_mu) - math.log(h.alpha_mu + big_n))
        + float(gammaln(0.5 * (a + big_n)) - gammaln(0.5 * a))
        + 0.5 * a * ld_t_y
        - 0.5 * (a + big_n) * ld_r_y
        - 0.5 * (a - 1.0) * ld_t_p
        + 0.5 * (a - 1.0 + big_n) * ld_r_p
    )


def build_score_table(
    i: int,
    candidates,
    d: DataMatrix,
    h: BgeHyper,
    stats: PosteriorStats | None = None,
) -> LocalScoreTable:
    """Score every subset of the candidate list for node i."""
    cands = tuple(int(c) for c in candidates)
    k = len(cands)
    if k > MAX_GROUND_SET:
        raise SizeOutOfRange(f"candidate list of size {k} exceeds {MAX_GROUND_SET}")
    if stats is None:
        stats = posterior_stats(d, h)
    n = d.n_variables
    big_n = d.n_samples
    prior = [log_dag_prior_factor(n, size) for size in range(k + 1)]
    out = np.empty(1 << k)
    for mask in range(1 << k):
        parents = [cands[p] for p in range(k) if mask >> p & 1]
        try:
            ll = bge_log_marginal(i, parents, stats, h, big_n)
        except NumericFailure as exc:
            raise NumericFailure(f"node {i}, parents {parents}: {exc}") from None
        out[mask] = ll + prior[mask.bit_count()]
    return LocalScoreTable(i, cands, out)


class ScoreCache:
    """Memoized local-score evaluation against one dataset.

    Used by the candidate-selection heuristics, which probe many
    overlapping parent sets per node.
    """

    def __init__(self, d: DataMatrix, h: BgeHyper | None = None):
        self.data = d
        self.hyper = h if h is not None else BgeHyper.default(d.n_variables)
        self.stats = posterior_stats(d, self.hyper)
        self.n = d.n_variables
        self.n_samples = d.n_samples
        self._memo: dict = {}

    def log_pi(self, i: int, parents) -> float:
        key = (i, frozenset(parents))
        val = self._memo.get(key)
        if val is None:
            val = bge_log_marginal(
                i, key[1], self.stats, self.hyper, self.n_samples
            ) + log_dag_prior_factor(self.n, len(key[1]))
            self._memo[key] = val
        return val

    def table(self, i: int, candidates) -> LocalScoreTable:
        return build_score_table(i, candidates, self.data, self.hyper, self.stats)


_HEADER = struct.Struct("<ii")


def dump_score_table(path, table: LocalScoreTable) -> None:
    """Binary dump: node id and K as int32, candidate ids as int32, then
    2^K little-endian float64 scores."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(table.node, table.k))
        fh.write(np.asarray(table.candidates, dtype="<i4").tobytes())
        fh.write(table.log_scores.astype("<f8").tobytes())


def load_score_table(path) -> LocalScoreTable:
    with open(path, "rb") as fh:
        node, k = _HEADER.unpack(fh.read(_HEADER.size))
        cands = np.frombuffer(fh.read(4 * k), dtype="<i4")
        scores = np.frombuffer(fh.read(8 * (1 << k)), dtype="<f8")
    return LocalScoreTable(int(node), tuple(int(c) for c in cands), scores.astype(np.float64))
