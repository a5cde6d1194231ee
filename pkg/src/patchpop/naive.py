"""Baseline population store: every individual is a full bit string.

Each operator copies the parent string and every fitness value is computed
from scratch, so the per-operation cost is Theta(n).  Position sampling uses
the same permutation-backed scratch machinery as the tree store (sampling was
never the expensive part of the baseline), but storage and evaluation are
deliberately straightforward.

Observable behavior matches the tree store for identical explicit operator
inputs.  One divergence is inherent: after a discard the bit string is freed
immediately (there is no tree to keep it in), so difference/mutate on a
discarded id fail here exactly like on a removed tree vertex; fitness and
alive metadata are retained for queries.
"""

import numpy as np

from ._jit import kernel
from .fitness import eval_full, fitness_key
from .indexset import iset_add_random_absent
from .patches import Patch, _fill_random_bits
from .rng import Rng, rand_below, sample_binomial_state


@kernel(inline=True)
def naive_offspring(parent_bits, out_bits, flips, count, ptag, weights, values):
    """Copy the parent, flip ``flips[:count]``, evaluate from scratch."""
    n = parent_bits.shape[0]
    for i in range(n):
        out_bits[i] = parent_bits[i]
    for k in range(count):
        out_bits[flips[k]] ^= 1
    return eval_full(out_bits, ptag, weights, values)


@kernel(inline=True)
def naive_diff_scan(b1, b2, dbuf, sbuf):
    """Full scan splitting positions into differing (dbuf) and same (sbuf).

    Returns the number of differing positions; sbuf holds the remaining
    n - d same positions.
    """
    d = np.int64(0)
    s = np.int64(0)
    for i in range(b1.shape[0]):
        if b1[i] != b2[i]:
            dbuf[d] = i
            d += 1
        else:
            sbuf[s] = i
            s += 1
    return d


@kernel(inline=True)
def naive_cross_make(b1, out_bits, dbuf, d, sbuf, keep_d, add_s, rstate,
                     ptag, weights, values):
    """Offspring of a crossover: flip keep_d differing + add_s same positions in b1.

    Sampling is a partial Fisher-Yates shuffle of each position list; both
    groups are uniform without replacement.  Evaluates from scratch.
    """
    n = b1.shape[0]
    for i in range(n):
        out_bits[i] = b1[i]
    for k in range(keep_d):
        j = k + rand_below(rstate, d - k)
        t = dbuf[j]
        dbuf[j] = dbuf[k]
        dbuf[k] = t
        out_bits[t] ^= 1
    ns = n - d
    for k in range(add_s):
        j = k + rand_below(rstate, ns - k)
        t = sbuf[j]
        sbuf[j] = sbuf[k]
        sbuf[k] = t
        out_bits[t] ^= 1
    return eval_full(out_bits, ptag, weights, values)


@kernel(inline=True)
def naive_sample_flips(perm, inv, ell, rstate):
    """Draw ell distinct positions into perm[:ell]; same draws as the tree store."""
    ss = np.int64(0)
    for _ in range(ell):
        ss, _e = iset_add_random_absent(perm, inv, ss, rstate)
    return ss


class NaiveStore:
    """Straightforward store behind the same interface as :class:`PatchTree`."""

    kind = "naive"

    def __init__(self, n: int, evaluator, rng: Rng | int):
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        if evaluator.n != n:
            raise ValueError("evaluator problem size does not match store size")
        self.n = int(n)
        self.evaluator = evaluator
        self.rng = rng if isinstance(rng, Rng) else Rng(rng)
        self._perm = np.arange(n, dtype=np.int32)
        self._inv = np.arange(n, dtype=np.int32)
        self._dbuf = np.empty(n, dtype=np.int32)
        self._sbuf = np.empty(n, dtype=np.int32)
        self._bits = {}
        self._raw = {}
        self._alive = {}
        self._next_id = 0
        bits = np.empty(n, dtype=np.uint8)
        _fill_random_bits(bits, self.rng.state)
        f0, f1 = eval_full(bits, evaluator.ptag, evaluator.weights, evaluator.values)
        self._register(bits, int(f0), int(f1))

    def _register(self, bits, f0, f1) -> int:
        nid = self._next_id
        self._next_id += 1
        self._bits[nid] = bits
        self._raw[nid] = (f0, f1)
        self._alive[nid] = True
        return nid

    def _live_bits(self, nid: int) -> np.ndarray:
        bits = self._bits.get(nid)
        if bits is None:
            if nid in self._raw:
                raise ValueError(f"node {nid} has been discarded")
            raise KeyError(f"node id {nid} is not stored")
        return bits

    # -- queries ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._bits)

    @property
    def alive_count(self) -> int:
        return len(self._bits)

    def node_ids(self):
        return sorted(self._bits)

    def alive_ids(self):
        return sorted(self._bits)

    def fitness(self, x: int):
        if x not in self._raw:
            raise KeyError(f"node id {x} is not stored")
        f0, f1 = self._raw[x]
        return self.evaluator.value_from_raw(f0, f1)

    def fitness_key(self, x: int) -> int:
        if x not in self._raw:
            raise KeyError(f"node id {x} is not stored")
        f0, f1 = self._raw[x]
        ev = self.evaluator
        return int(fitness_key(ev.ptag, ev.capacity, f0, f1))

    def alive(self, x: int) -> bool:
        if x not in self._raw:
            raise KeyError(f"node id {x} is not stored")
        return self._alive[x]

    def reconstruct(self, x: int) -> np.ndarray:
        return self._live_bits(x).copy()

    # -- operators ----------------------------------------------------------

    def mutate(self, parent: int, ell: int) -> int:
        pbits = self._live_bits(parent)
        if not 0 <= ell <= self.n:
            raise ValueError(f"flip count {ell} outside [0, {self.n}]")
        ss = naive_sample_flips(self._perm, self._inv, int(ell), self.rng.state)
        out = np.empty(self.n, dtype=np.uint8)
        ev = self.evaluator
        f0, f1 = naive_offspring(pbits, out, self._perm, ss, ev.ptag, ev.weights, ev.values)
        return self._register(out, int(f0), int(f1))

    def mutate_explicit(self, parent: int, indices) -> int:
        pbits = self._live_bits(parent)
        patch = indices if isinstance(indices, Patch) else Patch(indices, self.n)
        if len(patch) and patch.indices[-1] >= self.n:
            raise IndexError("patch index out of range")
        out = pbits.copy()
        out[patch.indices] ^= 1
        ev = self.evaluator
        f0, f1 = eval_full(out, ev.ptag, ev.weights, ev.values)
        return self._register(out, int(f0), int(f1))

    def add_random(self) -> int:
        ell = self.rng.binomial(self.n, 0.5)
        latest = max(self._bits)
        return self.mutate(latest, ell)

    def crossover(self, x1: int, x2: int, f) -> int:
        b1 = self._live_bits(x1)
        b2 = self._live_bits(x2)
        d = int(naive_diff_scan(b1, b2, self._dbuf, self._sbuf))
        keep_d, add_s = f(d, self.n, self.rng)
        if not 0 <= keep_d <= d:
            raise ValueError(f"crossover spec returned keep_d={keep_d} outside [0, {d}]")
        if not 0 <= add_s <= self.n - d:
            raise ValueError(
                f"crossover spec returned add_s={add_s} outside [0, {self.n - d}]"
            )
        out = np.empty(self.n, dtype=np.uint8)
        ev = self.evaluator
        f0, f1 = naive_cross_make(
            b1, out, self._dbuf, d, self._sbuf, int(keep_d), int(add_s),
            self.rng.state, ev.ptag, ev.weights, ev.values,
        )
        return self._register(out, int(f0), int(f1))

    def difference(self, x1: int, x2: int) -> Patch:
        b1 = self._live_bits(x1)
        b2 = self._live_bits(x2)
        return Patch(np.nonzero(b1 != b2)[0].astype(np.int64))

    def discard(self, x: int) -> None:
        self._live_bits(x)
        if len(self._bits) <= 1:
            raise ValueError("cannot discard the last alive individual")
        del self._bits[x]
        self._alive[x] = False

    # -- diagnostics ---------------------------------------------------------

    def total_patch_size(self) -> int:
        """Minimum spanning tree weight of the alive individuals' Hamming graph.

        Computed on demand with Prim's algorithm; used only for parity checks
        against the tree store, never in timing measurements.
        """
        ids = self.node_ids()
        k = len(ids)
        if k <= 1:
            return 0
        mat = np.stack([self._bits[i] for i in ids])
        dm = (mat[:, None, :] != mat[None, :, :]).sum(axis=2)
        in_tree = np.zeros(k, dtype=bool)
        best = np.full(k, np.iinfo(np.int64).max)
        in_tree[0] = True
        best_total = 0
        cur = 0
        for _ in range(k - 1):
            best = np.minimum(best, dm[cur])
            best[in_tree] = np.iinfo(np.int64).max
            cur = int(np.argmin(best))
            best_total += int(best[cur])
            in_tree[cur] = True
        return best_total

    def dump(self) -> str:
        """Vertex metadata lines; the naive store has no edges to report."""
        lines = []
        for nid in sorted(self._raw):
            f0, f1 = self._raw[nid]
            if self.evaluator.ptag == 0:
                fit = str(f0)
            else:
                fit = f"{f0},{f1}"
            lines.append(f"vertex {nid} fitness={fit} alive={int(self._alive[nid])}")
        return "\n".join(lines) + "\n"
