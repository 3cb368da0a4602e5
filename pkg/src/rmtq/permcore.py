"""Symmetric-group and non-crossing-partition combinatorics.

Permutations are stored in one-line form with 1-based images, so
``Permutation((2, 3, 1))`` sends 1 -> 2, 2 -> 3, 3 -> 1.  Composition follows
the usual right-to-left convention: ``compose(s, t)(i) == s(t(i))``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Permutation",
    "IntegerPartition",
    "SetPartition",
    "compose",
    "cycle_type_and_length",
    "distance",
    "mobius",
    "catalan",
    "all_permutations",
    "integer_partitions",
    "class_size",
    "noncrossing_partitions",
    "class_convolution_counts",
    "MAX_NC_DEGREE",
]

MAX_NC_DEGREE = 12


@dataclass(frozen=True)
class IntegerPartition:
    """A non-increasing tuple of positive integers (a cycle type)."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if any(x <= 0 for x in parts):
            raise ValueError(f"partition parts must be positive, got {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition parts must be non-increasing, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_parts(cls, parts: Sequence[int]) -> "IntegerPartition":
        """Build a partition from parts in any order."""
        return cls(tuple(sorted((int(x) for x in parts), reverse=True)))

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.parts)) + "]"


@dataclass(frozen=True)
class Permutation:
    """Element of S_p in one-line form (1-based images)."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if len(images) < 1:
            raise ValueError("permutation degree must be at least 1")
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"{images} is not a bijection of 1..{len(images)}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(tuple(range(1, p + 1)))

    @classmethod
    def from_cycles(cls, p: int, *cycles: Sequence[int]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(4, (1, 2), (3, 4))``."""
        images = list(range(1, p + 1))
        seen: set[int] = set()
        for cyc in cycles:
            for a, b in zip(cyc, tuple(cyc[1:]) + (cyc[0],)):
                if a in seen or not 1 <= a <= p:
                    raise ValueError(f"invalid or repeated point {a} in cycles {cycles}")
                seen.add(a)
                images[a - 1] = b
        return cls(tuple(images))

    @classmethod
    def full_cycle(cls, p: int) -> "Permutation":
        return cls.from_cycles(p, tuple(range(1, p + 1)))

    @classmethod
    def from_cycle_type(cls, cycle_type: IntegerPartition | Sequence[int]) -> "Permutation":
        """Canonical representative: consecutive blocks, each a cycle."""
        parts = tuple(cycle_type)
        cycles, start = [], 1
        for length in parts:
            cycles.append(tuple(range(start, start + length)))
            start += length
        return cls.from_cycles(start - 1, *cycles)

    @property
    def p(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        inv = [0] * self.p
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles (including fixed points), each starting at its smallest element."""
        seen = [False] * (self.p + 1)
        out = []
        for start in range(1, self.p + 1):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i - 1]
            out.append(tuple(cyc))
        return out

    @property
    def num_cycles(self) -> int:
        return len(self.cycles())

    @property
    def length(self) -> int:
        """|sigma| = p - #cycles, the minimal number of transpositions."""
        return self.p - self.num_cycles

    @property
    def cycle_type(self) -> IntegerPartition:
        return IntegerPartition.from_parts(len(c) for c in self.cycles())

    def is_identity(self) -> bool:
        return all(i == img for i, img in enumerate(self.images, start=1))


def compose(sigma: Permutation, tau: Permutation) -> Permutation:
    """Return sigma o tau, i.e. ``i -> sigma(tau(i))``."""
    if sigma.p != tau.p:
        raise ValueError(f"degree mismatch: {sigma.p} vs {tau.p}")
    return Permutation(tuple(sigma.images[t - 1] for t in tau.images))


def cycle_type_and_length(sigma: Permutation) -> tuple[IntegerPartition, int]:
    return sigma.cycle_type, sigma.length


def distance(sigma: Permutation, tau: Permutation) -> int:
    """Cayley distance |sigma^-1 tau|."""
    return compose(sigma.inverse(), tau).length


def catalan(i: int) -> int:
    return math.comb(2 * i, i) // (i + 1)


def mobius(sigma: Permutation | IntegerPartition) -> int:
    """Leading Weingarten coefficient: prod over cycles of (-1)^(d-1) Cat_{d-1}."""
    parts = sigma.cycle_type.parts if isinstance(sigma, Permutation) else sigma.parts
    out = 1
    for d in parts:
        out *= (-1) ** (d - 1) * catalan(d - 1)
    return out


def all_permutations(p: int) -> Iterator[Permutation]:
    """All of S_p in lexicographic one-line order."""
    for images in itertools.permutations(range(1, p + 1)):
        yield Permutation(images)


def integer_partitions(p: int) -> list[IntegerPartition]:
    """Partitions of p in reverse lexicographic order, starting with [p]."""
    if p < 0:
        raise ValueError("p must be non-negative")

    def rec(remaining: int, largest: int) -> Iterator[tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest

    return [IntegerPartition(parts) for parts in rec(p, p)]


def class_size(cycle_type: IntegerPartition) -> int:
    """Number of permutations with the given cycle type, p!/z_lambda."""
    z = 1
    for length, mult in Counter(cycle_type.parts).items():
        z *= length**mult * math.factorial(mult)
    return math.factorial(cycle_type.weight) // z


@dataclass(frozen=True)
class SetPartition:
    """Partition of {1..p} into disjoint blocks (each block sorted)."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in self.blocks if len(b)))
        points = [x for b in blocks for x in b]
        if sorted(points) != list(range(1, len(points) + 1)):
            raise ValueError(f"blocks {blocks} do not partition 1..{len(points)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def p(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(sorted((len(b) for b in self.blocks), reverse=True))

    def is_noncrossing(self) -> bool:
        """No a < b < c < d with a, c in one block and b, d in another."""
        owner = {x: i for i, b in enumerate(self.blocks) for x in b}
        for b1, b2 in itertools.combinations(range(len(self.blocks)), 2):
            seq = [owner[x] for x in range(1, self.p + 1) if owner[x] in (b1, b2)]
            changes = sum(1 for u, v in zip(seq, seq[1:]) if u != v)
            if changes > 2:
                return False
        return True


def _nc_blocks(elems: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    # Block containing elems[0] first; the gaps it leaves are filled independently.
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for r in range(len(rest) + 1):
        for combo in itertools.combinations(range(len(rest)), r):
            block = (first,) + tuple(rest[i] for i in combo)
            cuts = (-1,) + combo + (len(rest),)
            gaps = [rest[a + 1 : b] for a, b in zip(cuts, cuts[1:])]
            for fillings in itertools.product(*(list(_nc_blocks(g)) for g in gaps)):
                yield (block,) + tuple(b for f in fillings for b in f)


@lru_cache(maxsize=None)
def noncrossing_partitions(p: int) -> tuple[SetPartition, ...]:
    """All non-crossing partitions of {1..p}; there are Cat_p of them."""
    if not 1 <= p <= MAX_NC_DEGREE:
        raise ValueError(f"p must lie in 1..{MAX_NC_DEGREE}, got {p}")
    return tuple(SetPartition(blocks) for blocks in _nc_blocks(tuple(range(1, p + 1))))


def _cycle_counts(perms: np.ndarray) -> np.ndarray:
    """Number of cycles of each row of a (N, p) array of 0-based permutations."""
    n_rows, p = perms.shape
    rows = np.arange(n_rows)[:, None]
    cur = np.broadcast_to(np.arange(p), perms.shape).copy()
    orbit_min = cur.copy()
    for _ in range(p - 1):
        cur = perms[rows, cur]
        np.minimum(orbit_min, cur, out=orbit_min)
    return (orbit_min == np.arange(p)).sum(axis=1)


def _cycle_type_of_row(row: Sequence[int]) -> tuple[int, ...]:
    seen = [False] * len(row)
    lengths = []
    for start in range(len(row)):
        if seen[start]:
            continue
        n, i = 0, start
        while not seen[i]:
            seen[i] = True
            i = row[i]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths, reverse=True))


@lru_cache(maxsize=None)
def class_convolution_counts(p: int) -> tuple[tuple[IntegerPartition, ...], np.ndarray]:
    """Counts for class-function convolution on S_p.

    Returns ``(classes, K)`` where ``K[a, b, c]`` is the number of tau with
    cycle type ``classes[b]`` such that ``tau^-1 sigma_a`` has ``c`` cycles,
    ``sigma_a`` being any fixed permutation of type ``classes[a]``.
    The result does not depend on the dimension, so it is shared by every
    Weingarten table of degree p.
    """
    if not 1 <= p <= 8:
        raise ValueError(f"class convolution counts supported for 1 <= p <= 8, got {p}")
    classes = tuple(integer_partitions(p))
    index = {c.parts: i for i, c in enumerate(classes)}
    perms = np.array(list(itertools.permutations(range(p))), dtype=np.int64)
    perm_class = np.array([index[_cycle_type_of_row(row)] for row in perms.tolist()])
    inverses = np.argsort(perms, axis=1)

    K = np.zeros((len(classes), len(classes), p + 1), dtype=np.int64)
    for a, lam in enumerate(classes):
        sigma = np.array(Permutation.from_cycle_type(lam).images) - 1
        # (tau^-1 sigma)(i) = tau^-1[sigma[i]]
        products = inverses[:, sigma]
        counts = _cycle_counts(products)
        np.add.at(K[a], (perm_class, counts), 1)
    return classes, K
