"""Seedable random source shared by the Python API and the compiled kernels.

The generator is xoshiro256++ over a 4-word uint64 state array, seeded with
splitmix64.  Keeping the state in a plain numpy array lets the same stream be
consumed both from Python code and from inside njit kernels, so a run is
reproducible byte-for-byte regardless of where each draw happens.

Draw primitives, in stream order:

* ``next_u64``      -- one 64-bit output, advances the state once.
* ``rand_below``    -- unbiased integer in [0, bound) via rejection sampling;
                       consumes one draw per attempt (almost always exactly one).
* ``rand_unit``     -- float in [0, 1) from the top 53 bits of one draw.
* ``sample_binomial`` -- exact Bin(n, p) sample using geometric gap skipping,
                       O(np + 1) expected draws; for p > 1/2 the complement
                       n - Bin(n, 1 - p) is sampled.

The uint64 wraparound arithmetic needs different spellings under numba
(silent machine wraparound) and plain Python (explicit masking), so the two
lowest-level primitives have twin implementations selected at import time;
everything above them is single-source.  ``tests/test_rng.py`` asserts the
twins produce identical streams.
"""

import math

import numpy as np

from ._jit import JIT_ENABLED, kernel

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.1102230246251565e-16  # 2**-53


def seed_state(seed: int) -> np.ndarray:
    """Expand an integer seed into a fresh xoshiro256++ state via splitmix64."""
    state = np.empty(4, dtype=np.uint64)
    x = int(seed) & _MASK64
    for i in range(4):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        state[i] = z ^ (z >> 31)
    if not state.any():  # all-zero state is a fixed point of xoshiro
        state[0] = 0x9E3779B97F4A7C15
    return state


def derive_seed(master: int, *parts: int) -> int:
    """Deterministically derive a child seed from a master seed and coordinates.

    Used by the benchmark harness so that every (experiment cell, window, run)
    gets an independent stream that is a pure function of the master seed.
    """
    x = int(master) & _MASK64
    for p in parts:
        x = (x ^ ((int(p) & _MASK64) * 0x9E3779B97F4A7C15)) & _MASK64
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = x ^ (x >> 31)
    return x


if JIT_ENABLED:

    @kernel(inline=True)
    def next_u64(s):
        r = s[0] + s[3]
        r = ((r << np.uint64(23)) | (r >> np.uint64(41))) + s[0]
        t = s[1] << np.uint64(17)
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = (s[3] << np.uint64(45)) | (s[3] >> np.uint64(19))
        return r

    @kernel(inline=True)
    def rand_below(s, bound):
        # rejection removes the modulo bias exactly
        b = np.uint64(bound)
        threshold = (np.uint64(0) - b) % b
        while True:
            r = next_u64(s)
            if r >= threshold:
                return np.int64(r % b)

else:

    def next_u64(s):
        s0, s1, s2, s3 = int(s[0]), int(s[1]), int(s[2]), int(s[3])
        r = (s0 + s3) & _MASK64
        r = ((((r << 23) | (r >> 41)) & _MASK64) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        s[0] = s0
        s[1] = s1
        s[2] = s2
        s[3] = s3
        return np.uint64(r)

    def rand_below(s, bound):
        b = int(bound)
        threshold = ((1 << 64) - b) % b
        while True:
            r = int(next_u64(s))
            if r >= threshold:
                return np.int64(r % b)


@kernel(inline=True)
def rand_unit(s):
    """Uniform float64 in [0, 1)."""
    return np.float64(next_u64(s) >> np.uint64(11)) * _INV_2_53


@kernel(inline=True)
def sample_binomial_state(s, n, p):
    """Exact Bin(n, p) sample in O(np + 1) expected time.

    Successes are located by skipping geometric gaps between them, so the
    cost is proportional to the number of successes rather than to n.
    """
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    q = p
    flip = False
    if q > 0.5:
        q = 1.0 - q
        flip = True
    log_fail = math.log1p(-q)
    i = -1
    count = 0
    while True:
        u = rand_unit(s)
        if u <= 0.0:
            break  # gap beyond the end; probability 2**-53 per draw
        r = math.log(u) / log_fail
        if r >= np.float64(n - i):
            break
        i += np.int64(r) + 1
        if i >= n:
            break
        count += 1
    if flip:
        return n - count
    return count


class Rng:
    """Single per-run random source.

    All stochastic choices of a run (bit sampling, operator position choices,
    branch and parent selection, tie breaking) draw from one ``Rng`` in a
    fixed documented order, which makes runs reproducible from the seed.
    The raw ``state`` array can be handed to compiled kernels; draws made
    there advance the same stream.
    """

    __slots__ = ("state", "seed")

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.state = seed_state(seed)

    def u64(self) -> int:
        return int(next_u64(self.state))

    def below(self, bound: int) -> int:
        """Unbiased uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return int(rand_below(self.state, bound))

    def unit(self) -> float:
        return float(rand_unit(self.state))

    def bit(self) -> int:
        return int(next_u64(self.state) & np.uint64(1))

    def binomial(self, n: int, p: float) -> int:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {p}")
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        return int(sample_binomial_state(self.state, n, p))

    def spawn(self, *parts: int) -> "Rng":
        """Independent child generator derived from this one's seed and keys."""
        return Rng(derive_seed(self.seed, *parts))

    def __repr__(self):
        return f"Rng(seed={self.seed})"
