"""Log-domain arithmetic and fast transforms over subset lattices.

Nonnegative weights are represented by their natural logarithm as plain
floats: a weight of zero is ``-inf``, and NaN or ``+inf`` never appear in a
valid table.  Sums over the lattice are computed with shifted-exponent
additions only; subtraction is confined to :func:`log_sub`, which reports
when the result has lost all significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OrderViolation

NEG_INF = float("-inf")

#: Relative-difference threshold below which a log-domain subtraction is
#: considered cancelled and its result untrustworthy.
CANCEL_EPS = 2.0 ** -32

#: log1p(-CANCEL_EPS); a subtraction log(e^a - e^b) is flagged when
#: b - a exceeds this bound.
_LOG1M_CANCEL = math.log1p(-CANCEL_EPS)

#: Slack allowed on the ordering precondition of log_sub before the tables
#: feeding it are considered corrupted.
ORDER_TOL = 1e-9

MAX_GROUND_SET = 25


def log_add(a: float, b: float) -> float:
    """log(e^a + e^b) without overflow; commutative, identity -inf."""
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def log_sub(a: float, b: float, rel_eps: float = CANCEL_EPS) -> tuple[float, bool]:
    """log(e^a - e^b) plus a cancellation flag.

    The caller guarantees a >= b.  The flag is set when the linear-space
    relative difference 1 - e^(b-a) falls below ``rel_eps``; the returned
    value is then ``-inf`` and must not be trusted.  A violation of the
    ordering beyond a small float tolerance raises :class:`OrderViolation`.
    """
    if b == NEG_INF:
        return a, False
    d = b - a
    if d > 0.0:
        if d > ORDER_TOL:
            raise OrderViolation(f"minuend {a} smaller than subtrahend {b}")
        d = 0.0
    rel = -math.expm1(d)
    if rel < rel_eps:
        return NEG_INF, True
    return a + math.log(rel), False


@dataclass
class SubsetArray:
    """Log-weights over all subsets of a ground set of m elements.

    Entries are indexed by bitmask over element positions; entry 0 is the
    empty set.
    """

    m: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.m <= MAX_GROUND_SET:
            raise ValueError(f"ground-set size {self.m} outside [0, {MAX_GROUND_SET}]")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (1 << self.m,):
            raise ValueError(
                f"expected {1 << self.m} entries for m={self.m}, got {self.values.shape}"
            )
        if np.isnan(self.values).any() or (self.values == np.inf).any():
            raise ValueError("entries must be finite or -inf")

    def __len__(self):
        return len(self.values)

    def __getitem__(self, mask):
        return float(self.values[mask])


def zeta_transform_inplace(values: np.ndarray, m: int) -> None:
    """Butterfly pass turning f into g(T) = log sum_{S subseteq T} e^f(S).

    Runs m in-place passes over the bitmask array, one per element position,
    using O(2^m * m) shifted-exponent additions.
    """
    if values.shape != (1 << m,):
        raise ValueError("length must be 2^m")
    for p in range(m):
        v = values.reshape(-1, 2, 1 << p)
        np.logaddexp(v[:, 0, :], v[:, 1, :], out=v[:, 1, :])


def fast_zeta(f: SubsetArray) -> SubsetArray:
    """Zeta-transform f over the subset lattice, mutating it in place.

    The caller must hold exclusive access to ``f`` for the duration of the
    transform; the result is the same object.
    """
    zeta_transform_inplace(f.values, f.m)
    return f


def ternary_index_table(m: int) -> np.ndarray:
    """T1[mask] = sum of 3^p over set bits p of mask.

    A nested pair X subseteq Y then has the flat ternary index
    T1[X] + T1[Y]: position p contributes digit 2 when p is in X, digit 1
    when p is in Y only, digit 0 otherwise.
    """
    t1 = np.zeros(1 << m, dtype=np.int64)
    for p in range(m):
        t1[1 << p : 2 << p] = t1[: 1 << p] + 3 ** p
    return t1


def interval_sum_table(log_weights: np.ndarray, m: int) -> np.ndarray:
    """All interval sums f(X, Y) = log sum_{X subseteq S subseteq Y} e^w(S).

    Returns a flat array of 3^m entries addressed through
    :func:`ternary_index_table`.  Built by m butterfly passes of the
    recurrence f(X, Y) = f(X+{p}, Y) + f(X, Y-{p}), one per element, with
    the singleton intervals f(S, S) = w(S) as base cases.
    """
    if log_weights.shape != (1 << m,):
        raise ValueError("length must be 2^m")
    t1 = ternary_index_table(m)
    table = np.full(3 ** m, NEG_INF)
    table[2 * t1] = log_weights
    for p in range(m):
        v = table.reshape(-1, 3, 3 ** p)
        np.logaddexp(v[:, 0, :], v[:, 2, :], out=v[:, 1, :])
    return table


def submasks_of(mask: int) -> np.ndarray:
    """All submasks of ``mask`` as an int64 array (ascending order)."""
    bits = []
    m = mask
    while m:
        b = m & -m
        bits.append(b)
        m ^= b
    out = np.zeros(1 << len(bits), dtype=np.int64)
    idx = np.arange(1 << len(bits))
    for p, b in enumerate(bits):
        out += ((idx >> p) & 1) * b
    return out


def iter_bits(mask: int):
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b
