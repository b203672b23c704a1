"""Directed acyclic graphs over nodes 0..n-1, stored as parent sets."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CyclicGraph


@dataclass(frozen=True)
class Dag:
    """A DAG given by the parent set of each node.

    ``parent_sets[i]`` is a frozenset of the parents of node i.  Acyclicity
    is checked on construction.
    """

    n: int
    parent_sets: tuple

    def __post_init__(self):
        if len(self.parent_sets) != self.n:
            raise ValueError("need one parent set per node")
        sets = tuple(frozenset(s) for s in self.parent_sets)
        object.__setattr__(self, "parent_sets", sets)
        for i, s in enumerate(sets):
            if i in s or any(not 0 <= j < self.n for j in s):
                raise ValueError(f"invalid parent set for node {i}: {sorted(s)}")
        self.topological_order()

    @classmethod
    def from_parent_lists(cls, parents) -> "Dag":
        return cls(len(parents), tuple(frozenset(p) for p in parents))

    def parent_masks(self) -> list[int]:
        return [sum(1 << j for j in s) for s in self.parent_sets]

    def topological_order(self) -> list[int]:
        """Parents-first node order; raises CyclicGraph if none exists."""
        masks = self.parent_masks()
        placed = 0
        order = []
        remaining = set(range(self.n))
        while remaining:
            layer = [i for i in remaining if masks[i] & ~placed == 0]
            if not layer:
                raise CyclicGraph(f"no root among {sorted(remaining)}")
            for i in sorted(layer):
                order.append(i)
                placed |= 1 << i
            remaining.difference_update(layer)
        return order

    def ancestor_masks(self) -> list[int]:
        """Bitmask of (strict) ancestors per node."""
        anc = [0] * self.n
        for i in self.topological_order():
            m = 0
            for j in self.parent_sets[i]:
                m |= anc[j] | (1 << j)
            anc[i] = m
        return anc

    def edge_count(self) -> int:
        return sum(len(s) for s in self.parent_sets)


def empty_dag(n: int) -> Dag:
    return Dag(n, tuple(frozenset() for _ in range(n)))
