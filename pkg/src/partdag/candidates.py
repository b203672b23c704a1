"""Selection of K candidate parents per node.

Restricting every node's parents to a fixed K-set defines the sampling
space; the heuristics here try to cover as much posterior parent-set mass
as possible.  All of them break ties by ascending node id so repeated runs
agree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataio import BgeHyper, DataMatrix
from .errors import KTooLarge, MarginalsMissing
from .lattice import iter_bits
from .scores import ScoreCache


@dataclass(frozen=True)
class CandidateAssignment:
    """An ordered candidate-parent list of size k for every node."""

    k: int
    sets: tuple

    def __post_init__(self):
        sets = tuple(tuple(int(c) for c in s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        n = len(sets)
        for i, s in enumerate(sets):
            if len(s) != self.k or len(set(s)) != self.k:
                raise ValueError(f"node {i}: need {self.k} distinct candidates")
            if i in s or any(not 0 <= c < n for c in s):
                raise ValueError(f"node {i}: candidate ids out of range")

    @property
    def n(self) -> int:
        return len(self.sets)

    def to_json(self) -> str:
        return json.dumps(
            {"K": self.k, "candidates": {str(i): list(s) for i, s in enumerate(self.sets)}}
        )

    @classmethod
    def from_json(cls, text: str) -> "CandidateAssignment":
        obj = json.loads(text)
        sets = [obj["candidates"][str(i)] for i in range(len(obj["candidates"]))]
        return cls(int(obj["K"]), tuple(tuple(s) for s in sets))


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n - 1:
        raise KTooLarge(f"k={k} outside [1, {n - 1}]")


def select_top(d: DataMatrix, k: int, h: BgeHyper | None = None) -> CandidateAssignment:
    """Per node, the k best single parents by local score."""
    n = d.n_variables
    _check_k(k, n)
    cache = ScoreCache(d, h)
    sets = []
    for i in range(n):
        ranked = sorted(
            (j for j in range(n) if j != i),
            key=lambda j: (-cache.log_pi(i, (j,)), j),
        )
        sets.append(tuple(ranked[:k]))
    return CandidateAssignment(k, tuple(sets))


class _GreedyState:
    """Incremental greedy bookkeeping for one target node.

    Tracks, for every outside node j, the best score over parent sets that
    are subsets of the chosen prefix plus j.  Adding a node to the prefix
    only requires scoring the newly reachable sets.
    """

    def __init__(self, cache: ScoreCache, i: int):
        self.cache = cache
        self.i = i
        self.chosen: list = []
        self.subsets: list = [()]
        n = cache.n
        self.best = {
            j: cache.log_pi(i, (j,)) for j in range(n) if j != i
        }

    def pick_best(self) -> int:
        return min(self.best, key=lambda j: (-self.best[j], j))

    def add(self, c: int) -> None:
        self.chosen.append(c)
        del self.best[c]
        new_subsets = [s + (c,) for s in self.subsets]
        for j in self.best:
            best_j = self.best[j]
            for s in new_subsets:
                val = self.cache.log_pi(self.i, s + (j,))
                if val > best_j:
                    best_j = val
            self.best[j] = best_j
        self.subsets.extend(new_subsets)


def select_greedy(d: DataMatrix, k: int, h: BgeHyper | None = None) -> CandidateAssignment:
    """Grow each candidate set by repeatedly adding the node with the
    highest coverable score."""
    n = d.n_variables
    _check_k(k, n)
    cache = ScoreCache(d, h)
    sets = []
    for i in range(n):
        state = _GreedyState(cache, i)
        for _ in range(k):
            state.add(state.pick_best())
        sets.append(tuple(state.chosen))
    return CandidateAssignment(k, tuple(sets))


def select_greedy_lite(
    d: DataMatrix, k: int, s: int = 6, h: BgeHyper | None = None
) -> CandidateAssignment:
    """Greedy for the first k-s picks, then the s best remaining nodes in
    one step; cuts the number of scored sets by a factor of 2^s."""
    n = d.n_variables
    _check_k(k, n)
    if not 0 <= s <= k:
        raise KTooLarge(f"tail size s={s} outside [0, {k}]")
    cache = ScoreCache(d, h)
    sets = []
    for i in range(n):
        state = _GreedyState(cache, i)
        for _ in range(k - s):
            state.add(state.pick_best())
        tail = sorted(state.best, key=lambda j: (-state.best[j], j))[:s]
        sets.append(tuple(state.chosen) + tuple(tail))
    return CandidateAssignment(k, tuple(sets))


def select_back_forth(
    d: DataMatrix, k: int, seed=None, h: BgeHyper | None = None
) -> CandidateAssignment:
    """Start from a random k-set, then alternately drop the least useful
    node and add the best outside node until the swap undoes itself.

    The dropped node is the one whose removal shrinks the best covered
    score the least.  A hard cap of 10*k rounds guarantees termination;
    the best set seen is returned if the cap is hit.
    """
    n = d.n_variables
    _check_k(k, n)
    cache = ScoreCache(d, h)
    rng = np.random.default_rng(seed)
    sets = []

    def covered_max(i, cand):
        cand = tuple(sorted(cand))
        best = -np.inf
        for mask in range(1 << len(cand)):
            subset = tuple(cand[p] for p in iter_bits(mask))
            val = cache.log_pi(i, subset)
            if val > best:
                best = val
        return best

    for i in range(n):
        others = [j for j in range(n) if j != i]
        current = set(
            int(j) for j in rng.choice(others, size=k, replace=False)
        )
        best_seen = (covered_max(i, current), tuple(sorted(current)))
        for _ in range(10 * k):
            drop = min(
                current,
                key=lambda c: (-covered_max(i, current - {c}), c),
            )
            reduced = current - {drop}
            outside = [j for j in others if j not in reduced]
            gains = {
                j: max(
                    cache.log_pi(i, tuple(sorted(sub | {j})))
                    for sub in _powerset(reduced)
                )
                for j in outside
            }
            add = min(gains, key=lambda j: (-gains[j], j))
            current = reduced | {add}
            score = covered_max(i, current)
            if score > best_seen[0]:
                best_seen = (score, tuple(sorted(current)))
            if add == drop:
                break
        else:
            current = set(best_seen[1])
        sets.append(tuple(sorted(current)))
    return CandidateAssignment(k, tuple(sets))


def _powerset(items):
    items = tuple(sorted(items))
    for mask in range(1 << len(items)):
        yield frozenset(items[p] for p in iter_bits(mask))


def select_opt(marginals, k: int) -> CandidateAssignment:
    """Per node, the k-set covering the most exact parent-set posterior.

    Zeta-transforms the exact marginals so every k-set's covered mass is a
    single lookup, then scans all k-masks; ties go to the smallest mask.
    Requires exact marginals (small-n reference computation).
    """
    if getattr(marginals, "parent_marginals", None) is None:
        raise MarginalsMissing("exact parent-set marginals required")
    n = marginals.n
    _check_k(k, n)
    sets = []
    for i in range(n):
        g = np.array(marginals.parent_marginals[i], dtype=np.float64)
        m = n - 1
        for p in range(m):
            v = g.reshape(-1, 2, 1 << p)
            v[:, 1, :] += v[:, 0, :]
        best_mask, best_val = None, -np.inf
        for mask in range(1 << m):
            if mask.bit_count() != k:
                continue
            if g[mask] > best_val:
                best_val, best_mask = g[mask], mask
        others = [j for j in range(n) if j != i]
        sets.append(tuple(others[p] for p in iter_bits(best_mask)))
    return CandidateAssignment(k, tuple(sets))
