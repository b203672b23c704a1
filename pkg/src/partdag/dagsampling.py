"""Drawing DAGs conditionally on sampled root-partitions.

Given a partition, each node independently needs a parent set contained in
its predecessor union with at least one member of the immediately
preceding part, drawn proportionally to its local score.  A per-node table
of interval sums f(X, Y) = sum of weights of sets between X and Y lets one
such constrained set be generated in one pass over its elements.  The
table costs 3^K space, so nodes are processed one at a time across all
stored partitions and the table is discarded before the next node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySupport, NotSubset
from .graphs import Dag
from .lattice import NEG_INF, interval_sum_table, iter_bits, log_sub, ternary_index_table
from .scores import LocalScoreTable
from .tau import MaskIndexer


@dataclass
class IntervalSumTable:
    """All 3^K nested-pair sums log f(X, Y) for one node's score table.

    Pairs are addressed by a ternary mixed-radix index (per candidate
    position: outside Y, in Y only, or in X); ``log_f`` gives checked
    access.  ``source`` keeps the underlying score table for the
    brute-force fallback.
    """

    node: int
    candidates: tuple
    table: np.ndarray
    source: LocalScoreTable = field(repr=False, default=None)

    def __post_init__(self):
        k = len(self.candidates)
        if self.table.shape != (3 ** k,):
            raise ValueError(f"expected {3 ** k} entries")
        self._t1 = ternary_index_table(k).tolist()
        self._ft = self.table.tolist()

    @property
    def k(self) -> int:
        return len(self.candidates)

    def log_f(self, x_mask: int, y_mask: int) -> float:
        if x_mask & ~y_mask:
            raise NotSubset(f"X={x_mask:b} not inside Y={y_mask:b}")
        return self._ft[self._t1[x_mask] + self._t1[y_mask]]


def build_interval_sums(t: LocalScoreTable) -> IntervalSumTable:
    """O(3^K) construction from the recurrence
    f(X, Y) = f(X+{p}, Y) + f(X, Y-{p})."""
    return IntervalSumTable(t.node, t.candidates, interval_sum_table(t.log_scores, t.k), t)


def sample_parents(tab: IntervalSumTable, u: int, t: int, rng) -> int:
    """Draw S inside u with S intersecting t, proportionally to its weight.

    Masks index candidate positions.  Elements of u are decided in
    ascending order; the inclusion probability of the next element is the
    ratio g(X+{p}, E) / g(X, E) of remaining-weight sums, each one
    subtraction of two interval sums until the intersection constraint is
    met and a single lookup afterwards.  Any cancelled subtraction aborts
    the walk and restarts the whole draw by brute force, which keeps the
    output distribution exact.
    """
    if t == 0 or t & ~u:
        raise NotSubset(f"need nonempty t={t:b} inside u={u:b}")
    pow3 = [3 ** p for p in range(tab.k)]
    ft = tab._ft
    t1 = tab._t1
    idx_full = t1[u]
    idx_red = t1[u & ~t]
    den, flagged = log_sub(ft[idx_full], ft[idx_red])
    if flagged:
        return sample_parents_bruteforce(tab.source, u, t, rng)
    if den == NEG_INF:
        raise EmptySupport(f"no parent set inside {u:b} meets {t:b}")
    chosen = 0
    intersected = False
    for p in iter_bits(u):
        step = pow3[p]
        in_t = t >> p & 1
        if intersected or in_t:
            num = ft[idx_full + step]
        else:
            num, flagged = log_sub(ft[idx_full + step], ft[idx_red + step])
            if flagged:
                return sample_parents_bruteforce(tab.source, u, t, rng)
        include = num > NEG_INF and (
            num >= den or rng.random() < math.exp(num - den)
        )
        if include:
            chosen |= 1 << p
            idx_full += step
            if in_t:
                intersected = True
            else:
                idx_red += step
            den = num
        else:
            idx_full -= step
            if intersected:
                den = ft[idx_full]
            else:
                if not in_t:
                    idx_red -= step
                den, flagged = log_sub(ft[idx_full], ft[idx_red])
                if flagged or den == NEG_INF:
                    return sample_parents_bruteforce(tab.source, u, t, rng)
    if chosen & ~u or not chosen & t:
        raise AssertionError("drawn parent set violates its constraints")
    return chosen


def sample_parents_bruteforce(t: LocalScoreTable, u: int, t_mask: int, rng) -> int:
    """Enumerate the valid parent sets and draw one by cumulative weight."""
    if t_mask == 0 or t_mask & ~u:
        raise NotSubset(f"need nonempty t={t_mask:b} inside u={u:b}")
    masks = []
    logs = []
    scores = t.log_scores
    sub = u
    while True:
        if sub & t_mask:
            val = scores[sub]
            if val > NEG_INF:
                masks.append(sub)
                logs.append(val)
        if sub == 0:
            break
        sub = (sub - 1) & u
    if not masks:
        raise EmptySupport(f"no parent set inside {u:b} meets {t_mask:b}")
    shift = max(logs)
    weights = [math.exp(v - shift) for v in logs]
    target = rng.random() * math.fsum(weights)
    acc = 0.0
    for mask, w in zip(masks, weights):
        acc += w
        if target < acc:
            return mask
    return masks[-1]


def partition_contexts(partitions, n: int):
    """Per partition and node: (predecessor-union mask, previous-part mask).

    Nodes of the first part get (0, 0), meaning an empty parent set.
    """
    ctx = []
    for r in partitions:
        row = [(0, 0)] * n
        placed = 0
        prev = 0
        for part in r.parts:
            if placed:
                for i in iter_bits(part):
                    row[i] = (placed, prev)
            placed |= part
            prev = part
        ctx.append(row)
    return ctx


def sample_dags(partitions, tables, rng) -> list:
    """One DAG per stored partition, processing node by node.

    For each node the interval-sum table is built once, used to draw that
    node's parents for every partition, and released, so peak memory stays
    at a single 3^K table regardless of how many DAGs are generated.
    """
    tables = list(tables)
    n = len(tables)
    for i, tbl in enumerate(tables):
        if tbl.node != i:
            raise ValueError("tables must be ordered by node id")
    ctx = partition_contexts(partitions, n)
    parents = [[None] * n for _ in partitions]
    for i in range(n):
        interval = build_interval_sums(tables[i])
        indexer = MaskIndexer(tables[i].candidates)
        cands = tables[i].candidates
        for s, row in enumerate(ctx):
            placed, prev = row[i]
            if prev == 0:
                parents[s][i] = ()
                continue
            u_loc = indexer.to_local(placed)
            t_loc = indexer.to_local(prev)
            if t_loc == 0:
                raise EmptySupport(
                    f"node {i}, partition {s}: previous part misses all candidates"
                )
            try:
                mask = sample_parents(interval, u_loc, t_loc, rng)
            except EmptySupport:
                raise EmptySupport(
                    f"node {i}, partition {s}: no admissible parent set"
                ) from None
            parents[s][i] = tuple(cands[p] for p in iter_bits(mask))
        del interval
    return [Dag.from_parent_lists(p) for p in parents]
