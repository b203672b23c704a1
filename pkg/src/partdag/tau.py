"""Per-node score-sum tables answering tau_i(U, T) queries in O(1).

tau_i(U, T) sums pi_i(S) over parent sets S inside U that intersect T.
Storing the zeta transform tau_i(J) of the score table is enough, because
tau_i(U, T) = tau_i(U) - tau_i(U minus T); only arguments intersected with
the candidate set matter.  The subtraction can cancel catastrophically, so
the build phase sweeps all 3^K nested pairs once, recomputes the flagged
ones exactly with additions only, and keeps them in an exception store
consulted by the query path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotSubset, OrderViolation
from .lattice import (
    CANCEL_EPS,
    NEG_INF,
    interval_sum_table,
    iter_bits,
    submasks_of,
    ternary_index_table,
    zeta_transform_inplace,
)
from .scores import LocalScoreTable


class MaskIndexer:
    """Translates global node-id bitmasks to candidate-position bitmasks.

    Lookup goes through 8-bit chunk tables, so conversion cost does not
    depend on the candidate count.  Bits of non-candidate nodes are
    silently dropped, which is exactly the intersection with the
    candidate set.
    """

    __slots__ = ("candidates", "cand_mask", "_luts")

    def __init__(self, candidates):
        self.candidates = tuple(int(c) for c in candidates)
        self.cand_mask = 0
        for c in self.candidates:
            self.cand_mask |= 1 << c
        n_chunks = (max(self.candidates) // 8 + 1) if self.candidates else 1
        luts = []
        for chunk in range(n_chunks):
            in_chunk = [
                (pos, cid - 8 * chunk)
                for pos, cid in enumerate(self.candidates)
                if 8 * chunk <= cid < 8 * chunk + 8
            ]
            lut = [0] * 256
            for byte in range(256):
                m = 0
                for pos, off in in_chunk:
                    if byte >> off & 1:
                        m |= 1 << pos
                lut[byte] = m
            luts.append(lut)
        self._luts = luts

    def to_local(self, gmask: int) -> int:
        loc = 0
        shift = 0
        for lut in self._luts:
            loc |= lut[(gmask >> shift) & 255]
            shift += 8
        return loc

    def to_global(self, lmask: int) -> int:
        g = 0
        for pos in iter_bits(lmask):
            g |= 1 << self.candidates[pos]
        return g


@dataclass
class TauTable:
    """Zeta-transformed scores of one node plus its exception store."""

    node: int
    candidates: tuple
    log_tau: np.ndarray
    exceptions: dict
    cancel_eps: float = CANCEL_EPS
    indexer: MaskIndexer = field(default=None, repr=False)

    def __post_init__(self):
        if self.indexer is None:
            self.indexer = MaskIndexer(self.candidates)
        self._log1m = math.log1p(-self.cancel_eps)
        # plain-float list is noticeably faster than ndarray scalar access
        # in the simulation hot path
        self._lt = self.log_tau.tolist() if len(self.candidates) <= 20 else self.log_tau

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def exception_count(self) -> int:
        return len(self.exceptions)

    def log_pi_empty(self) -> float:
        return float(self.log_tau[0])


def _exact_tau_pair(f_table: np.ndarray, t1: np.ndarray, u: int, t: int) -> float:
    """Addition-only evaluation of tau(U, T).

    Splitting on the smallest element j of the intersection with T gives
    tau(U, T) = sum_j f({j}, U minus {elements of T below j}), a sum of
    interval sums, each a single table lookup.
    """
    total = NEG_INF
    rem = u
    for j in iter_bits(t):
        bit = 1 << j
        val = float(f_table[t1[bit] + t1[rem]])
        if val > total:
            total, val = val, total
        if val != NEG_INF:
            total += math.log1p(math.exp(val - total))
        rem ^= bit
    return total


def build_tau(table: LocalScoreTable, cancel_eps: float = CANCEL_EPS) -> TauTable:
    """Zeta-transform the score table and populate the exception store.

    Sweeps all 3^K nested pairs (U, T): a pair is kept if and only if the
    subtraction tau(U) - tau(U minus T) loses essentially all precision,
    in which case the exact value is recomputed from interval sums.
    """
    k = table.k
    lt = table.log_scores.copy()
    zeta_transform_inplace(lt, k)
    log1m = math.log1p(-cancel_eps)
    exceptions: dict = {}
    if k > 0:
        f_table = interval_sum_table(table.log_scores, k)
        t1 = ternary_index_table(k)
        for u in range(1, 1 << k):
            subs = submasks_of(u)[:-1]  # drop sub == u, i.e. empty T
            flagged = subs[(lt[subs] - lt[u]) > log1m]
            for sub in flagged:
                sub = int(sub)
                t = u ^ sub
                exceptions[(u << k) | t] = _exact_tau_pair(f_table, t1, u, t)
    return TauTable(table.node, table.candidates, lt, exceptions, cancel_eps)


def tau_query(tab: TauTable, u: int, t: int | None = None) -> float:
    """tau of the node over parent sets inside u intersecting t.

    Arguments are global node-id bitmasks; only their intersections with
    the candidate set matter.  With ``t=None`` the unrestricted sum over
    subsets of u is returned.  An empty intersection of t with the
    candidates means no admissible parent set exists, hence -inf.
    """
    idx = tab.indexer
    if t is None:
        return float(tab._lt[idx.to_local(u)])
    if t & ~u:
        raise NotSubset(f"t={t:b} not a subset of u={u:b}")
    tl = idx.to_local(t)
    if tl == 0:
        return NEG_INF
    ul = idx.to_local(u)
    a = tab._lt[ul]
    b = tab._lt[ul & ~tl]
    d = b - a
    if d > tab._log1m:
        # the build sweep flagged exactly these pairs, so a missing entry
        # means the tables were not built together
        try:
            return tab.exceptions[(ul << tab.k) | tl]
        except KeyError:
            raise OrderViolation(
                f"tau table inconsistent at U={ul:b}, T={tl:b} (d={d:.3e})"
            ) from None
    return a + math.log1p(-math.exp(d))
