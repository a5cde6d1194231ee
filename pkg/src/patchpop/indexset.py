"""Permutation-backed mutable index set over a fixed universe [0, n).

This is the scratch structure every tree operation is built on.  It keeps a
permutation ``perm`` of [0, n) and its inverse; the current members are
exactly ``perm[0:size]``.  That layout gives O(1) toggle and membership, O(1)
uniform sampling of an absent (or present) element by swapping with a random
entry of the absent (present) block, and O(size) iteration/snapshot.

The raw-array kernels are module level so that the population tree can run
them on its own scratch arrays from inside compiled code; the :class:`IndexSet`
class is a thin owner of one perm/inv pair for standalone use.
"""

import numpy as np

from ._jit import kernel
from .patches import Patch
from .rng import Rng, rand_below


@kernel(inline=True)
def iset_toggle(perm, inv, size, e):
    """Invert membership of e; returns the new size."""
    pos = inv[e]
    if pos < size:
        last = perm[size - 1]
        perm[pos] = last
        inv[last] = pos
        perm[size - 1] = e
        inv[e] = size - 1
        return size - 1
    first = perm[size]
    perm[pos] = first
    inv[first] = pos
    perm[size] = e
    inv[e] = size
    return size + 1


@kernel(inline=True)
def iset_add_random_absent(perm, inv, size, rstate):
    """Add one uniformly chosen absent element; returns (new size, element)."""
    n = perm.shape[0]
    j = size + rand_below(rstate, n - size)
    e = perm[j]
    first = perm[size]
    perm[j] = first
    inv[first] = j
    perm[size] = e
    inv[e] = size
    return size + 1, e


@kernel(inline=True)
def iset_remove_random_present(perm, inv, size, rstate):
    """Remove one uniformly chosen present element; returns (new size, element)."""
    j = rand_below(rstate, size)
    e = perm[j]
    last = perm[size - 1]
    perm[j] = last
    inv[last] = j
    perm[size - 1] = e
    inv[e] = size - 1
    return size - 1, e


@kernel(inline=True)
def iset_flip_random(perm, inv, size, n_add, n_remove, rstate):
    """Remove n_remove random present elements, then add n_add random absent ones.

    The removals happen first; both groups are sampled uniformly without
    replacement, and removed elements are eligible to be re-added.
    """
    for _ in range(n_remove):
        size, _e = iset_remove_random_present(perm, inv, size, rstate)
    for _ in range(n_add):
        size, _e = iset_add_random_absent(perm, inv, size, rstate)
    return size


@kernel(inline=True)
def iset_merge(perm, inv, size, indices):
    """Toggle every index in the array (symmetric difference); returns new size."""
    for k in range(indices.shape[0]):
        size = iset_toggle(perm, inv, size, indices[k])
    return size


class IndexSet:
    """Mutable subset of [0, n) with O(1) toggle, membership and uniform sampling."""

    __slots__ = ("n", "perm", "inv", "size")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"universe size must be positive, got {n}")
        self.n = int(n)
        self.perm = np.arange(n, dtype=np.int32)
        self.inv = np.arange(n, dtype=np.int32)
        self.size = 0

    def _check(self, e: int) -> int:
        e = int(e)
        if not 0 <= e < self.n:
            raise IndexError(f"element {e} out of range for universe [0, {self.n})")
        return e

    def clear(self) -> None:
        self.size = 0

    def toggle(self, e: int) -> None:
        self.size = int(iset_toggle(self.perm, self.inv, self.size, self._check(e)))

    def __contains__(self, e) -> bool:
        e = self._check(e)
        return bool(self.inv[e] < self.size)

    def __len__(self) -> int:
        return self.size

    def add_random_absent(self, rng: Rng) -> int:
        """Add and return a uniformly chosen absent element."""
        if self.size >= self.n:
            raise ValueError("set is full; no absent element to add")
        size, e = iset_add_random_absent(self.perm, self.inv, self.size, rng.state)
        self.size = int(size)
        return int(e)

    def flip_random(self, n_add: int, n_remove: int, rng: Rng) -> None:
        """Add n_add random absent and remove n_remove random present elements."""
        if n_remove < 0 or n_remove > self.size:
            raise ValueError(f"cannot remove {n_remove} of {self.size} present elements")
        if n_add < 0 or n_add > self.n - self.size:
            raise ValueError(f"cannot add {n_add} elements to a set of size {self.size}")
        self.size = int(
            iset_flip_random(self.perm, self.inv, self.size, n_add, n_remove, rng.state)
        )

    def merge(self, patch: Patch) -> None:
        """Symmetric difference with the patch (toggle each of its indices)."""
        if len(patch) and patch.indices[-1] >= self.n:
            raise IndexError(
                f"patch index {patch.indices[-1]} out of range for universe [0, {self.n})"
            )
        self.size = int(iset_merge(self.perm, self.inv, self.size, patch.indices))

    def snapshot(self) -> Patch:
        """Immutable sorted copy of the current members; the set is unchanged."""
        return Patch(np.sort(self.perm[: self.size].astype(np.int64)))

    def members(self) -> set:
        return set(self.perm[: self.size].tolist())

    def __repr__(self):
        return f"IndexSet(n={self.n}, members={sorted(self.members())})"
