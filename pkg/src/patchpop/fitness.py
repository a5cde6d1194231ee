"""Fitness evaluation: full, and incremental from a set of changed positions.

Two problems are provided.  OneMax scores a bit string by its number of
ones.  The knapsack problem keeps the pair (total weight, total value) as its
fitness value and compares pairs through a scalar key: the total value while
the selection fits the capacity, minus the total weight once it does not.
Keeping the raw pair (rather than the key) is what makes incremental updates
possible: flipping bit i moves both sums by the i-th item's weight and value.

Both evaluators expose the same surface: ``full`` evaluation of a bit string,
``delta`` evaluation given the previous value and the flipped positions, and
a total order via ``key``.  Stores treat fitness internally as an (f0, f1)
int64 pair plus the key; the evaluator converts to the problem-level value.
"""

from dataclasses import dataclass

import numpy as np

from ._jit import kernel
from .rng import Rng

PROBLEM_ONEMAX = 0
PROBLEM_KNAPSACK = 1

# all sums must stay well inside int64; 2**62 leaves headroom for deltas
_SUM_LIMIT = 1 << 62


@kernel(inline=True)
def eval_full(bits, ptag, weights, values):
    """From-scratch evaluation; returns the raw (f0, f1) pair."""
    n = bits.shape[0]
    if ptag == PROBLEM_ONEMAX:
        c = np.int64(0)
        for i in range(n):
            c += bits[i]
        return c, np.int64(0)
    ws = np.int64(0)
    vs = np.int64(0)
    for i in range(n):
        if bits[i]:
            ws += weights[i]
            vs += values[i]
    return ws, vs


@kernel(inline=True)
def fitness_key(ptag, capacity, f0, f1):
    """Scalar ordering key for a raw fitness pair (larger is better)."""
    if ptag == PROBLEM_ONEMAX:
        return f0
    if f0 <= capacity:
        return f1
    return -f0


@kernel(inline=True)
def apply_flips_delta(bits, flips, count, ptag, weights, values, f0, f1):
    """Flip ``flips[:count]`` in bits, updating the raw fitness incrementally."""
    for k in range(count):
        i = flips[k]
        b = bits[i] ^ 1
        bits[i] = b
        if ptag == PROBLEM_ONEMAX:
            if b:
                f0 += 1
            else:
                f0 -= 1
        else:
            if b:
                f0 += weights[i]
                f1 += values[i]
            else:
                f0 -= weights[i]
                f1 -= values[i]
    return f0, f1


@dataclass(frozen=True)
class KnapsackInstance:
    """n items with positive integer weights/values and a capacity."""

    weights: np.ndarray
    values: np.ndarray
    capacity: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.int64)
        if w.ndim != 1 or v.ndim != 1 or w.shape != v.shape:
            raise ValueError("weights and values must be equal-length 1-d sequences")
        if w.size == 0:
            raise ValueError("instance must have at least one item")
        if (w <= 0).any() or (v <= 0).any():
            raise ValueError("weights and values must be positive")
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        peak = int(max(w.max(), v.max()))
        if w.size * peak >= _SUM_LIMIT:
            raise ValueError("instance too large: sums would not fit 64-bit arithmetic")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "capacity", int(self.capacity))

    @property
    def n(self) -> int:
        return int(self.weights.size)


def generate_instance(n: int, rng: Rng) -> KnapsackInstance:
    """Random uncorrelated instance: weights/values uniform in [10000, 20000],
    capacity = floor(sum of weights / 2).  Deterministic in the rng seed."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    w = np.empty(n, dtype=np.int64)
    v = np.empty(n, dtype=np.int64)
    for i in range(n):
        w[i] = 10000 + rng.below(10001)
        v[i] = 10000 + rng.below(10001)
    return KnapsackInstance(w, v, int(w.sum()) // 2)


def save_instance(inst: KnapsackInstance, path) -> None:
    """Text format: header line 'n capacity', then n lines 'weight value'."""
    with open(path, "w", encoding="ascii") as f:
        f.write(f"{inst.n} {inst.capacity}\n")
        for w, v in zip(inst.weights.tolist(), inst.values.tolist()):
            f.write(f"{w} {v}\n")


def load_instance(path) -> KnapsackInstance:
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError("instance header must be 'n capacity'")
        n, capacity = int(header[0]), int(header[1])
        w = np.empty(n, dtype=np.int64)
        v = np.empty(n, dtype=np.int64)
        for i in range(n):
            parts = f.readline().split()
            if len(parts) != 2:
                raise ValueError(f"bad item line {i + 1}")
            w[i], v[i] = int(parts[0]), int(parts[1])
    return KnapsackInstance(w, v, capacity)


class OneMaxEvaluator:
    """Number of one-bits; fitness values are plain ints."""

    problem = "onemax"
    ptag = PROBLEM_ONEMAX

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        self.n = int(n)
        self.weights = np.empty(0, dtype=np.int64)
        self.values = np.empty(0, dtype=np.int64)
        self.capacity = 0

    def full(self, bits: np.ndarray) -> int:
        if bits.shape[0] != self.n:
            raise ValueError(f"expected {self.n} bits, got {bits.shape[0]}")
        return int(np.count_nonzero(bits))

    def delta(self, old: int, patch, new_bits: np.ndarray) -> int:
        """New count from the old one, looking only at the flipped positions."""
        idx = patch.indices if hasattr(patch, "indices") else np.asarray(patch)
        if len(idx) == 0:
            return old
        ones = int(np.count_nonzero(new_bits[idx]))
        return old + ones - (len(idx) - ones)

    def key(self, value: int) -> int:
        return int(value)

    def value_from_raw(self, f0: int, f1: int) -> int:
        return int(f0)

    @property
    def optimum_key(self) -> int:
        return self.n


class KnapsackEvaluator:
    """Fitness values are (total weight, total value) pairs over an instance."""

    problem = "knapsack"
    ptag = PROBLEM_KNAPSACK

    def __init__(self, instance: KnapsackInstance):
        self.instance = instance
        self.n = instance.n
        self.weights = instance.weights
        self.values = instance.values
        self.capacity = instance.capacity

    def full(self, bits: np.ndarray) -> tuple:
        if bits.shape[0] != self.n:
            raise ValueError(f"expected {self.n} bits, got {bits.shape[0]}")
        sel = bits != 0
        return (int(self.weights[sel].sum()), int(self.values[sel].sum()))

    def delta(self, old: tuple, patch, new_bits: np.ndarray) -> tuple:
        ws, vs = old
        idx = patch.indices if hasattr(patch, "indices") else np.asarray(patch)
        for i in idx:
            if new_bits[i]:
                ws += int(self.weights[i])
                vs += int(self.values[i])
            else:
                ws -= int(self.weights[i])
                vs -= int(self.values[i])
        return (int(ws), int(vs))

    def key(self, value: tuple) -> int:
        ws, vs = value
        return int(vs) if ws <= self.capacity else -int(ws)

    def value_from_raw(self, f0: int, f1: int) -> tuple:
        return (int(f0), int(f1))


def knapsack_compare(a: tuple, b: tuple, capacity: int) -> int:
    """Total order on (weight, value) pairs: -1, 0 or 1 as a <, =, > b.

    Feasible selections compare by value; infeasible ones by negated weight.
    """
    ka = a[1] if a[0] <= capacity else -a[0]
    kb = b[1] if b[0] <= capacity else -b[0]
    return (ka > kb) - (ka < kb)
