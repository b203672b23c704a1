"""Metropolis-Hastings simulation on ordered root-partitions.

A root-partition assigns every node to the layer in which it becomes a
root when the DAG is peeled from the top; a DAG has exactly one, so the
partition posterior aggregates DAG posterior mass without the orderings
bias.  The probability of a partition factorizes into per-node score sums
tau_i(predecessors, previous part), so table lookups make each simulation
step cheap.  Mixing is helped by running several chains at tempered
versions of the target and proposing state swaps between neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CyclicGraph, NoMoves
from .graphs import Dag
from .lattice import NEG_INF, iter_bits
from .tau import tau_query


class RootPartition:
    """An ordered partition of the nodes 0..n-1 into nonempty parts.

    Parts are stored as bitmasks, first part leftmost.
    """

    __slots__ = ("parts", "n")

    def __init__(self, parts, n: int, _validate: bool = True):
        self.parts = tuple(int(p) for p in parts)
        self.n = n
        if _validate:
            union = 0
            for p in self.parts:
                if p == 0:
                    raise ValueError("parts must be nonempty")
                if p & union:
                    raise ValueError("parts must be disjoint")
                union |= p
            if union != (1 << n) - 1:
                raise ValueError("parts must cover all nodes")

    @classmethod
    def from_node_sets(cls, sets, n: int) -> "RootPartition":
        masks = []
        for s in sets:
            m = 0
            for i in s:
                m |= 1 << int(i)
            masks.append(m)
        return cls(masks, n)

    def node_lists(self) -> list:
        return [sorted(iter_bits(p)) for p in self.parts]

    def __len__(self):
        return len(self.parts)

    def __eq__(self, other):
        return isinstance(other, RootPartition) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return "RootPartition(%s)" % "|".join(
            ",".join(map(str, part)) for part in self.node_lists()
        )


@dataclass
class McmcConfig:
    chains: int = 16
    length: int = 100_000
    thinning: int = 1
    burn_in_fraction: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        if self.chains < 1 or self.length < 1 or self.thinning < 1:
            raise ValueError("chains, length and thinning must be >= 1")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")


@dataclass
class ChainState:
    partition: RootPartition
    log_score: float
    inverse_temperature: float = 1.0


def partition_score(r: RootPartition, taus) -> float:
    """log probability mass (unnormalized) of all DAGs with this
    root-partition.

    Nodes of the first part contribute their empty-parent-set score; a
    node of a later part sums its scores over parent sets drawn from the
    predecessor union with at least one member in the immediately
    preceding part.  Any impossible factor makes the whole partition
    impossible.
    """
    total = 0.0
    placed = 0
    prev = 0
    for part in r.parts:
        if placed == 0:
            for i in iter_bits(part):
                total += taus[i].log_pi_empty()
        else:
            for i in iter_bits(part):
                val = tau_query(taus[i], placed, prev)
                if val == NEG_INF:
                    return NEG_INF
                total += val
        placed |= part
        prev = part
    return total


def enumerate_moves(r: RootPartition) -> tuple[int, int, int]:
    """Counts of (splits, merges, swaps) available from this partition."""
    splits = 0
    swaps = 0
    sizes = [p.bit_count() for p in r.parts]
    seen = 0
    for size in sizes:
        splits += (1 << size) - 2
        swaps += size * seen
        seen += size
    return splits, len(r.parts) - 1, swaps


def _scatter_bits(selector: int, bit_positions) -> int:
    mask = 0
    for p, b in enumerate(bit_positions):
        if selector >> p & 1:
            mask |= 1 << b
    return mask


def propose(r: RootPartition, rng) -> tuple[RootPartition, float]:
    """Draw one neighbour uniformly over all atomic moves.

    Moves are: replace a part by an ordered pair of nonempty complements
    (split), fuse two adjacent parts (merge), or exchange one node between
    two distinct parts (swap).  Returns the proposal together with
    log q(r|r') - log q(r'|r), which under uniform-over-moves proposals is
    log |N(r)| - log |N(r')|.
    """
    splits, merges, swaps = enumerate_moves(r)
    total = splits + merges + swaps
    if total == 0:
        raise NoMoves("singleton node set has no neighbours")
    parts = r.parts
    pick = int(rng.integers(total))
    if pick < splits:
        for t, part in enumerate(parts):
            options = (1 << part.bit_count()) - 2
            if pick < options:
                bits = list(iter_bits(part))
                sub = _scatter_bits(pick + 1, bits)
                new_parts = parts[:t] + (sub, part ^ sub) + parts[t + 1 :]
                break
            pick -= options
    elif pick < splits + merges:
        t = pick - splits
        new_parts = parts[:t] + (parts[t] | parts[t + 1],) + parts[t + 2 :]
    else:
        pick -= splits + merges
        n_parts = len(parts)
        for t in range(n_parts - 1):
            for u in range(t + 1, n_parts):
                block = parts[t].bit_count() * parts[u].bit_count()
                if pick < block:
                    bits_t = list(iter_bits(parts[t]))
                    bits_u = list(iter_bits(parts[u]))
                    a = 1 << bits_t[pick // len(bits_u)]
                    b = 1 << bits_u[pick % len(bits_u)]
                    new_parts = list(parts)
                    new_parts[t] = (parts[t] ^ a) | b
                    new_parts[u] = (parts[u] ^ b) | a
                    new_parts = tuple(new_parts)
                    break
                pick -= block
            else:
                continue
            break
    proposal = RootPartition(new_parts, r.n, _validate=False)
    s2, m2, w2 = enumerate_moves(proposal)
    return proposal, math.log(total) - math.log(s2 + m2 + w2)


def mh_step(state: ChainState, taus, rng) -> tuple[ChainState, bool]:
    """One Metropolis-Hastings update; returns (state, accepted).

    The acceptance ratio tempers the score difference by the chain's
    inverse temperature; the proposal-count correction is untempered.
    """
    proposal, log_q_ratio = propose(state.partition, rng)
    new_score = partition_score(proposal, taus)
    if new_score == NEG_INF:
        return state, False
    log_alpha = state.inverse_temperature * (new_score - state.log_score) + log_q_ratio
    if log_alpha >= 0.0 or rng.random() < math.exp(log_alpha):
        state.partition = proposal
        state.log_score = new_score
        return state, True
    return state, False


def coupled_swap(states, rng) -> bool:
    """Propose exchanging the partitions of a random adjacent chain pair.

    With M chains at inverse temperatures k/M, a swap between chains k and
    k+1 is accepted with probability min(1, (pi_k / pi_{k+1})^(1/M)); the
    cached scores travel with the partitions.
    """
    m = len(states)
    if m < 2:
        raise ValueError("need at least two chains to swap")
    k = int(rng.integers(m - 1))
    lo, hi = states[k], states[k + 1]
    log_alpha = (lo.log_score - hi.log_score) / m
    if log_alpha >= 0.0 or rng.random() < math.exp(log_alpha):
        lo.partition, hi.partition = hi.partition, lo.partition
        lo.log_score, hi.log_score = hi.log_score, lo.log_score
        return True
    return False


@dataclass
class McmcRun:
    """Stored samples plus acceptance diagnostics of one simulation."""

    samples: list
    sample_steps: list
    sample_scores: list
    accept_counts: list
    proposal_counts: list
    swap_accepts: int = 0
    swap_attempts: int = 0

    def acceptance_rates(self) -> list:
        return [
            a / p if p else 0.0
            for a, p in zip(self.accept_counts, self.proposal_counts)
        ]

    def swap_rate(self) -> float:
        return self.swap_accepts / self.swap_attempts if self.swap_attempts else 0.0


def run(cfg: McmcConfig, taus, rng=None) -> McmcRun:
    """Simulate the coupled chains and collect thinned cold-chain samples.

    Every chain starts from the single-part partition, whose score is
    always finite.  Odd steps advance all chains by one within-chain
    update; even steps attempt one swap (with a single chain every step is
    an update).  The first burn_in_fraction * length steps are discarded,
    then the coldest chain is recorded every ``thinning`` steps.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = len(taus)
    m = cfg.chains
    start = RootPartition(((1 << n) - 1,), n)
    start_score = partition_score(start, taus)
    states = [
        ChainState(start, start_score, (k + 1) / m) for k in range(m)
    ]
    cold = m - 1
    cutoff = int(cfg.burn_in_fraction * cfg.length)
    out = McmcRun([], [], [], [0] * m, [0] * m)
    for step in range(1, cfg.length + 1):
        if m >= 2 and step % 2 == 0:
            out.swap_attempts += 1
            out.swap_accepts += coupled_swap(states, rng)
        else:
            for idx, st in enumerate(states):
                _, accepted = mh_step(st, taus, rng)
                out.proposal_counts[idx] += 1
                out.accept_counts[idx] += accepted
        if step > cutoff and (step - cutoff) % cfg.thinning == 0:
            out.samples.append(states[cold].partition)
            out.sample_steps.append(step)
            out.sample_scores.append(states[cold].log_score)
    return out


def root_partition_of(g: Dag) -> RootPartition:
    """Peel root layers off the DAG; the layering is unique."""
    masks = g.parent_masks()
    remaining = (1 << g.n) - 1
    parts = []
    while remaining:
        layer = 0
        for i in iter_bits(remaining):
            if masks[i] & remaining == 0:
                layer |= 1 << i
        if layer == 0:
            raise CyclicGraph("graph has a directed cycle")
        parts.append(layer)
        remaining ^= layer
    return RootPartition(parts, g.n)
