"""Brute-force reference posteriors for small node counts.

Two independent routes to the exact posterior are provided: direct
enumeration of every DAG, and summation of partition masses over every
ordered set partition.  They must agree, which makes them useful oracles
for each other and for the samplers.  Also here: exact coverage evaluation
of candidate assignments and Markov equivalence classes via covered-edge
reversals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CandidateRestricted, TooLarge
from .graphs import Dag
from .lattice import NEG_INF, iter_bits
from .tau import build_tau, tau_query

MAX_DAG_ENUM = 5
MAX_PARTITION_SUM = 9
MAX_EQUIV_CLASS = 8


def compress_mask(mask: int, i: int) -> int:
    """Drop bit i from a global node mask, closing the gap."""
    lo = mask & ((1 << i) - 1)
    return lo | ((mask >> (i + 1)) << i)


def expand_mask(local: int, i: int) -> int:
    """Inverse of compress_mask: reinsert a zero bit at position i."""
    lo = local & ((1 << i) - 1)
    return lo | ((local >> i) << (i + 1))


@dataclass
class ExactPosterior:
    """Exact partition function and marginals of the DAG posterior.

    ``parent_marginals[i][mask]`` is the posterior probability that node
    i's parent set equals the local mask over the other nodes (bit p is
    node p for p < i, node p+1 otherwise).  ``edge_marginals[i, j]`` is
    the probability of edge j -> i; ``ancestor_marginals[i, j]`` that of j
    being an ancestor of i (None when not computed).
    """

    n: int
    log_z: float
    parent_marginals: list
    edge_marginals: np.ndarray
    ancestor_marginals: np.ndarray | None = None

    def parent_prob(self, i: int, parents) -> float:
        mask = 0
        for j in parents:
            mask |= 1 << (j if j < i else j - 1)
        return float(self.parent_marginals[i][mask])

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "log_z": self.log_z,
                "parent_marginals": [list(map(float, g)) for g in self.parent_marginals],
                "edge_marginals": self.edge_marginals.tolist(),
                "ancestor_marginals": None
                if self.ancestor_marginals is None
                else self.ancestor_marginals.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ExactPosterior":
        obj = json.loads(text)
        anc = obj["ancestor_marginals"]
        return cls(
            obj["n"],
            obj["log_z"],
            [np.asarray(g) for g in obj["parent_marginals"]],
            np.asarray(obj["edge_marginals"]),
            None if anc is None else np.asarray(anc),
        )


def _require_full_candidates(tables) -> int:
    n = len(tables)
    for i, t in enumerate(tables):
        if t.node != i or t.candidates != tuple(j for j in range(n) if j != i):
            raise CandidateRestricted(
                f"node {i}: scores must cover all subsets of the other nodes"
            )
    return n


def _edge_marginals_from_parents(parent_marginals, n: int) -> np.ndarray:
    edges = np.zeros((n, n))
    idx = np.arange(1 << (n - 1))
    for i in range(n):
        g = parent_marginals[i]
        for j in range(n):
            if j == i:
                continue
            pos = j if j < i else j - 1
            edges[i, j] = float(g[(idx >> pos & 1) == 1].sum())
    return edges


def dag_posterior_support(tables):
    """Every DAG over the full candidate sets with its posterior weight.

    Returns (pa_local, weights, log_z): an array of per-node local parent
    masks per DAG, the normalized posterior probabilities, and the log
    partition function.  Feasible up to n = 5.
    """
    n = _require_full_candidates(tables)
    if n > MAX_DAG_ENUM:
        raise TooLarge(f"DAG enumeration limited to n <= {MAX_DAG_ENUM}")
    m = n - 1
    pa_local = np.indices((1 << m,) * n).reshape(n, -1).T
    n_graphs = pa_local.shape[0]

    pa_global = np.empty_like(pa_local)
    for i in range(n):
        v = pa_local[:, i]
        pa_global[:, i] = (v & ((1 << i) - 1)) | ((v >> i) << (i + 1))

    removed = np.zeros(n_graphs, dtype=np.int64)
    for _ in range(n):
        for i in range(n):
            bit = 1 << i
            newly = ((removed & bit) == 0) & ((pa_global[:, i] & ~removed) == 0)
            removed[newly] |= bit
    acyclic = removed == (1 << n) - 1

    totals = np.zeros(n_graphs)
    for i in range(n):
        totals += tables[i].log_scores[pa_local[:, i]]
    totals = totals[acyclic]
    pa_local = pa_local[acyclic]

    finite = totals > NEG_INF
    log_z = float(
        np.logaddexp.reduce(totals[finite]) if finite.any() else NEG_INF
    )
    weights = np.zeros(len(totals))
    weights[finite] = np.exp(totals[finite] - log_z)
    return pa_local, weights, log_z


def dag_from_local_masks(local_masks) -> Dag:
    """Build a Dag from per-node parent masks over the other nodes."""
    n = len(local_masks)
    parents = []
    for i, local in enumerate(local_masks):
        mask = expand_mask(int(local), i)
        parents.append([j for j in iter_bits(mask)])
    return Dag.from_parent_lists(parents)


def posterior_by_dag_enumeration(tables) -> ExactPosterior:
    """Accumulate the posterior over every DAG (feasible up to n = 5)."""
    pa_local, weights, log_z = dag_posterior_support(tables)
    n = len(tables)
    m = n - 1

    parent_marginals = []
    for i in range(n):
        g = np.zeros(1 << m)
        np.add.at(g, pa_local[:, i], weights)
        parent_marginals.append(g)

    adj = np.zeros((len(weights), n, n), dtype=bool)
    for i in range(n):
        for pos in range(m):
            j = pos if pos < i else pos + 1
            adj[:, i, j] = (pa_local[:, i] >> pos & 1) == 1
    reach = adj.copy()
    for _ in range(max(1, math.ceil(math.log2(max(n - 1, 2))))):
        reach |= np.matmul(reach.astype(np.uint8), reach.astype(np.uint8)) > 0
    ancestor = np.einsum("g,gij->ij", weights, reach.astype(np.float64))

    return ExactPosterior(
        n,
        log_z,
        parent_marginals,
        _edge_marginals_from_parents(parent_marginals, n),
        ancestor,
    )


def _partition_factor(taus, part: int, placed: int, prev: int) -> float:
    total = 0.0
    if placed == 0:
        for i in iter_bits(part):
            total += taus[i].log_pi_empty()
        return total
    for i in iter_bits(part):
        val = tau_query(taus[i], placed, prev)
        if val == NEG_INF:
            return NEG_INF
        total += val
    return total


def iter_ordered_partitions(n: int):
    """Yield every ordered set partition of {0..n-1} as a tuple of masks."""
    full = (1 << n) - 1

    def rec(remaining, prefix):
        if remaining == 0:
            yield prefix
            return
        sub = remaining
        while sub:
            yield from rec(remaining ^ sub, prefix + (sub,))
            sub = (sub - 1) & remaining

    yield from rec(full, ())


def partition_log_z(taus, n: int) -> float:
    """Partition function by streaming over all ordered partitions."""
    if n > MAX_PARTITION_SUM:
        raise TooLarge(f"partition summation limited to n <= {MAX_PARTITION_SUM}")
    acc = NEG_INF

    def rec(remaining, placed, prev, partial):
        nonlocal acc
        if remaining == 0:
            acc = np.logaddexp(acc, partial)
            return
        sub = remaining
        while sub:
            delta = _partition_factor(taus, sub, placed, prev)
            if delta > NEG_INF:
                rec(remaining ^ sub, placed | sub, sub, partial + delta)
            sub = (sub - 1) & remaining

    rec((1 << n) - 1, 0, 0, 0.0)
    return float(acc)


def posterior_by_partition_sum(taus, tables) -> ExactPosterior:
    """Exact posterior via the unique-root-partition factorization.

    Every DAG is counted exactly once because it has one root-partition;
    parent-set marginals follow by weighting each node's conditional
    parent distribution with the partition masses in which it appears.
    Needs unrestricted candidate sets and n <= 9.  Ancestor marginals are
    not available on this route.
    """
    n = _require_full_candidates(tables)
    if n > MAX_PARTITION_SUM:
        raise TooLarge(f"partition summation limited to n <= {MAX_PARTITION_SUM}")

    contexts = [dict() for _ in range(n)]
    log_z = NEG_INF
    path = []

    def rec(remaining, placed, prev, partial):
        nonlocal log_z
        if remaining == 0:
            log_z = np.logaddexp(log_z, partial)
            pl = 0
            pv = 0
            for part in path:
                for i in iter_bits(part):
                    key = (pl, pv)
                    d = contexts[i]
                    old = d.get(key)
                    d[key] = partial if old is None else np.logaddexp(old, partial)
                pl |= part
                pv = part
            return
        sub = remaining
        while sub:
            delta = _partition_factor(taus, sub, placed, prev)
            if delta > NEG_INF:
                path.append(sub)
                rec(remaining ^ sub, placed | sub, sub, partial + delta)
                path.pop()
            sub = (sub - 1) & remaining

    rec((1 << n) - 1, 0, 0, 0.0)
    log_z = float(log_z)

    parent_marginals = []
    for i in range(n):
        g = np.zeros(1 << (n - 1))
        scores = tables[i].log_scores
        for (placed, prev), w in contexts[i].items():
            if placed == 0:
                g[0] += math.exp(w - log_z)
                continue
            tau_val = tau_query(taus[i], placed, prev)
            base = w - log_z - tau_val
            u_loc = compress_mask(placed, i)
            t_loc = compress_mask(prev, i)
            sub = u_loc
            while True:
                if sub & t_loc:
                    val = scores[sub]
                    if val > NEG_INF:
                        g[sub] += math.exp(val + base)
                if sub == 0:
                    break
                sub = (sub - 1) & u_loc
        parent_marginals.append(g)

    return ExactPosterior(
        n,
        log_z,
        parent_marginals,
        _edge_marginals_from_parents(parent_marginals, n),
        None,
    )


def restrict_tables(tables, assign):
    """Copy of full score tables with mass outside each candidate set
    removed (set to -inf)."""
    n = len(tables)
    out = []
    for i, tbl in enumerate(tables):
        allowed_mask = 0
        for c in assign.sets[i]:
            allowed_mask |= 1 << (c if c < i else c - 1)
        idx = np.arange(1 << (n - 1))
        keep = (idx & ~allowed_mask) == 0
        scores = np.where(keep, tbl.log_scores, NEG_INF)
        out.append(type(tbl)(tbl.node, tbl.candidates, scores))
    return out


def mean_coverage(assign, exact: ExactPosterior) -> float:
    """Average over nodes of the exact posterior mass of parent sets
    inside the node's candidate set."""
    n = exact.n
    total_cov = 0.0
    for i in range(n):
        cloc = 0
        for c in assign.sets[i]:
            cloc |= 1 << (c if c < i else c - 1)
        g = exact.parent_marginals[i]
        total = 0.0
        sub = cloc
        while True:
            total += g[sub]
            if sub == 0:
                break
            sub = (sub - 1) & cloc
        total_cov += total
    return total_cov / n


def coverage_exact(assign, exact: ExactPosterior, tables) -> tuple[float, float]:
    """(coverage, mean coverage) of a candidate assignment.

    Mean coverage averages, over nodes, the exact posterior mass of parent
    sets inside the node's candidates.  Coverage is the joint mass of DAGs
    whose every parent set is covered, computed by re-running the
    partition summation with non-covered scores removed.
    """
    n = exact.n
    mean_cov = mean_coverage(assign, exact)

    restricted = restrict_tables(tables, assign)
    taus_r = [build_tau(t) for t in restricted]
    log_z_restricted = partition_log_z(taus_r, n)
    coverage = math.exp(log_z_restricted - exact.log_z) if log_z_restricted > NEG_INF else 0.0
    return coverage, mean_cov


def covered_edges(g: Dag):
    """Edges i -> j with pa(j) = pa(i) + {i}; reversing one stays in the
    same equivalence class."""
    out = []
    for j in range(g.n):
        for i in g.parent_sets[j]:
            if g.parent_sets[j] == g.parent_sets[i] | {i}:
                out.append((i, j))
    return out


def reverse_edge(g: Dag, i: int, j: int) -> Dag:
    sets = list(g.parent_sets)
    sets[j] = sets[j] - {i}
    sets[i] = sets[i] | {j}
    return Dag(g.n, tuple(sets))


def markov_equivalence_class(g: Dag) -> set:
    """Closure of the DAG under covered-edge reversals (n <= 8)."""
    if g.n > MAX_EQUIV_CLASS:
        raise TooLarge(f"equivalence classes limited to n <= {MAX_EQUIV_CLASS}")
    seen = {g}
    frontier = [g]
    while frontier:
        cur = frontier.pop()
        for i, j in covered_edges(cur):
            nxt = reverse_edge(cur, i, j)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen
