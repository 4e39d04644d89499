"""Immutable bitset over predictor indices 1..d.

VarSet is the common currency for every set-valued quantity in the
package (invariant sets, ancestor sets, Markov boundaries, search
results).  It stores its members in a single Python integer, one bit
per predictor, so union/intersection/difference are word-parallel and
sets are hashable and safe to share across workers.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class VarSet:
    """A frozen set of predictor indices, each in {1, ..., d}.

    Bit k of the underlying mask corresponds to predictor k; bit 0 is
    never used.  The set carries no reference to a particular graph:
    a VarSet built for one DAG can be reused on another with the same
    number of predictors.
    """

    __slots__ = ("mask",)

    def __init__(self, indices: Iterable[int] = ()) -> None:
        mask = 0
        for k in indices:
            if k < 1:
                raise ValueError(f"predictor index must be >= 1, got {k}")
            mask |= 1 << k
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("VarSet is immutable")

    @classmethod
    def from_mask(cls, mask: int) -> "VarSet":
        """Wrap a raw bitmask (bit k <-> predictor k; bit 0 must be clear)."""
        if mask < 0 or mask & 1:
            raise ValueError("invalid VarSet mask")
        s = cls.__new__(cls)
        object.__setattr__(s, "mask", mask)
        return s

    @classmethod
    def empty(cls) -> "VarSet":
        return _EMPTY

    @classmethod
    def full(cls, d: int) -> "VarSet":
        """The set {1, ..., d}."""
        return cls.from_mask(((1 << d) - 1) << 1)

    def __contains__(self, k: int) -> bool:
        return k >= 1 and bool(self.mask >> k & 1)

    def __iter__(self) -> Iterator[int]:
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        return isinstance(other, VarSet) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    def __le__(self, other: "VarSet") -> bool:
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "VarSet") -> bool:
        return self.mask != other.mask and self.mask & ~other.mask == 0

    def __ge__(self, other: "VarSet") -> bool:
        return other <= self

    def __gt__(self, other: "VarSet") -> bool:
        return other < self

    def __or__(self, other: "VarSet") -> "VarSet":
        return VarSet.from_mask(self.mask | other.mask)

    def __and__(self, other: "VarSet") -> "VarSet":
        return VarSet.from_mask(self.mask & other.mask)

    def __sub__(self, other: "VarSet") -> "VarSet":
        return VarSet.from_mask(self.mask & ~other.mask)

    def add(self, k: int) -> "VarSet":
        """Return a new set with predictor k added."""
        if k < 1:
            raise ValueError(f"predictor index must be >= 1, got {k}")
        return VarSet.from_mask(self.mask | 1 << k)

    def remove(self, k: int) -> "VarSet":
        """Return a new set with predictor k removed (no-op if absent)."""
        if k < 1:
            raise ValueError(f"predictor index must be >= 1, got {k}")
        return VarSet.from_mask(self.mask & ~(1 << k))

    def isdisjoint(self, other: "VarSet") -> bool:
        return self.mask & other.mask == 0

    def indices(self) -> tuple[int, ...]:
        """Members as a sorted tuple, e.g. for serialization."""
        return tuple(self)

    def __repr__(self) -> str:
        return f"VarSet({{{', '.join(map(str, self))}}})"


_EMPTY = VarSet.from_mask(0)


def jaccard(a: VarSet, b: VarSet) -> float:
    """Jaccard similarity |a & b| / |a | b|, defined as 0.0 for two empty sets."""
    union = a.mask | b.mask
    if union == 0:
        return 0.0
    inter = a.mask & b.mask
    return bin(inter).count("1") / bin(union).count("1")
