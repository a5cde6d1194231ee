"""Immutable patches and bit-string helpers.

A bit string is a plain numpy uint8 array of 0/1 values; there is no wrapper
class.  A :class:`Patch` is the canonical immutable description of a set of
bit positions to flip: a strictly increasing index array.  Applying a patch
twice restores the original string, and the patch between two bit strings is
exactly the set of positions where they differ.
"""

import numpy as np

from ._jit import kernel
from .rng import next_u64


class Patch:
    """Sorted, duplicate-free set of bit indices to flip.

    Canonical form (strictly increasing int64 indices) makes equality and
    hashing cheap and makes the patch size usable directly as an edge weight.
    Empty patches are legal values.
    """

    __slots__ = ("indices",)

    def __init__(self, indices, n: int | None = None):
        arr = np.asarray(indices, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("patch indices must be one-dimensional")
        if arr.size:
            if arr[0] < 0:
                raise IndexError(f"negative bit index {arr[0]}")
            if not (arr[1:] > arr[:-1]).all():
                raise ValueError("patch indices must be strictly increasing")
            if n is not None and arr[-1] >= n:
                raise IndexError(f"bit index {arr[-1]} out of range for n={n}")
        arr = arr.copy() if arr.base is not None or arr.flags.writeable else arr
        arr.setflags(write=False)
        object.__setattr__(self, "indices", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Patch is immutable")

    @classmethod
    def from_unsorted(cls, indices, n: int | None = None) -> "Patch":
        """Build a patch from indices in arbitrary order (still duplicate-free)."""
        return cls(np.sort(np.asarray(indices, dtype=np.int64)), n)

    @classmethod
    def empty(cls) -> "Patch":
        return cls(np.empty(0, dtype=np.int64))

    def apply_to(self, bits: np.ndarray) -> None:
        """Flip the listed bits in place; an involution."""
        if len(self.indices) and self.indices[-1] >= len(bits):
            raise IndexError(
                f"bit index {self.indices[-1]} out of range for length {len(bits)}"
            )
        bits[self.indices] ^= 1

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other):
        if not isinstance(other, Patch):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())

    def __repr__(self):
        return f"Patch({self.indices.tolist()})"


def apply_patch(bits: np.ndarray, patch: Patch) -> None:
    """Flip the patch's bit positions in ``bits`` in place."""
    patch.apply_to(bits)


@kernel(inline=True)
def _fill_random_bits(out, rstate):
    for i in range(out.shape[0]):
        out[i] = next_u64(rstate) & np.uint64(1)


def random_bits(n: int, rng) -> np.ndarray:
    """Uniform random bit string of length n; one stream draw per bit."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    out = np.empty(n, dtype=np.uint8)
    _fill_random_bits(out, rng.state)
    return out


def bits_from_str(s: str) -> np.ndarray:
    """Parse a '0'/'1' string into a bit array (handy for literal test vectors)."""
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


def bits_to_str(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape != b.shape:
        raise ValueError("bit strings must have equal length")
    return int(np.count_nonzero(a != b))


def difference_patch(a: np.ndarray, b: np.ndarray) -> Patch:
    """Patch converting bit string a into b (and vice versa)."""
    if a.shape != b.shape:
        raise ValueError("bit strings must have equal length")
    return Patch(np.nonzero(a != b)[0].astype(np.int64))
