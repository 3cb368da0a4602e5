"""Exact and asymptotic Haar-unitary integration, plus Gaussian (Wick) moments.

All exact values are :class:`fractions.Fraction`.  Only the invertible regime
``n >= p`` is supported; for ``n < p`` the function ``sigma -> n^#sigma`` is
singular on S_p and no pseudo-inverse convention is guessed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .permcore import (
    IntegerPartition,
    Permutation,
    all_permutations,
    class_convolution_counts,
    compose,
    mobius,
)

__all__ = [
    "WeingartenTable",
    "MonomialSpec",
    "CovarianceForm",
    "weingarten_table",
    "wg_exact",
    "wg_asymptotic",
    "wg_full_cycle_closed_form",
    "haar_monomial_integral",
    "wick_moment",
    "pairings",
    "MAX_WG_DEGREE",
    "MAX_MONOMIAL_DEGREE",
]

MAX_WG_DEGREE = 8
MAX_MONOMIAL_DEGREE = 6


@dataclass(frozen=True)
class WeingartenTable:
    """Wg(n, .) on S_p, one exact value per cycle type."""

    p: int
    n: int
    values: Mapping[IntegerPartition, Fraction]

    def __getitem__(self, key: IntegerPartition | Permutation) -> Fraction:
        if isinstance(key, Permutation):
            key = key.cycle_type
        return self.values[key]

    def convolution_defect(self) -> dict[IntegerPartition, Fraction]:
        """sum_tau Wg(tau) n^#(tau^-1 sigma) - delta(sigma), per class of sigma."""
        classes, K = class_convolution_counts(self.p)
        out = {}
        for a, lam in enumerate(classes):
            total = Fraction(0)
            for b, mu in enumerate(classes):
                for c in range(1, self.p + 1):
                    if K[a, b, c]:
                        total += int(K[a, b, c]) * self.values[mu] * self.n**c
            out[lam] = total - (1 if a == len(classes) - 1 else 0)
        return out


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    m = len(A)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if M[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular convolution system")
        M[col], M[pivot] = M[pivot], M[col]
        piv = M[col][col]
        M[col] = [x / piv for x in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][m] for r in range(m)]


def _check_regime(n: int, p: int, max_p: int) -> None:
    if p < 1:
        raise ValueError("degree p must be at least 1")
    if p > max_p:
        raise ValueError(f"degree p={p} exceeds size guard {max_p}")
    if n < p:
        raise ValueError(f"n={n} < p={p}: pseudo-inverse regime unsupported")


@lru_cache(maxsize=None)
def weingarten_table(n: int, p: int) -> WeingartenTable:
    """Build (and memoize) the exact Weingarten table for S_p at dimension n.

    The class function Wg solves ``sum_tau Wg(tau) n^#(tau^-1 sigma) = delta``;
    grouping tau by cycle type gives one unknown per partition of p.
    """
    _check_regime(n, p, MAX_WG_DEGREE)
    classes, K = class_convolution_counts(p)
    powers = [Fraction(n) ** c for c in range(p + 1)]
    A = [
        [sum((int(K[a, b, c]) * powers[c] for c in range(1, p + 1)), Fraction(0)) for b in range(len(classes))]
        for a in range(len(classes))
    ]
    # integer_partitions lists [1,...,1] (the identity class) last
    rhs = [Fraction(0)] * len(classes)
    rhs[-1] = Fraction(1)
    sol = _solve_exact(A, rhs)
    return WeingartenTable(p=p, n=n, values=dict(zip(classes, sol)))


def wg_exact(n: int, cycle_type: IntegerPartition | Sequence[int]) -> Fraction:
    """Exact Wg(n, sigma) for any sigma of the given cycle type.

    >>> wg_exact(4, IntegerPartition((2,)))
    Fraction(-1, 60)
    """
    if not isinstance(cycle_type, IntegerPartition):
        cycle_type = IntegerPartition.from_parts(cycle_type)
    return weingarten_table(n, cycle_type.weight)[cycle_type]


def wg_full_cycle_closed_form(n: int, d: int) -> Fraction:
    """(-1)^(d-1) Cat_{d-1} / prod_{-d+1 <= j <= d-1} (n - j)."""
    denom = 1
    for j in range(-d + 1, d):
        denom *= n - j
    cat = math.comb(2 * (d - 1), d - 1) // d
    return Fraction((-1) ** (d - 1) * cat, denom)


def wg_asymptotic(n: int, sigma: Permutation) -> float:
    """Leading-order value n^-(p + |sigma|) Mob(sigma)."""
    if n < 1:
        raise ValueError("n must be positive")
    return mobius(sigma) * float(n) ** (-(sigma.p + sigma.length))


@dataclass(frozen=True)
class MonomialSpec:
    """Index tuples for prod U_{i_k j_k} prod conj(U_{i'_k j'_k}) (1-based)."""

    i: tuple[int, ...]
    j: tuple[int, ...]
    i_conj: tuple[int, ...]
    j_conj: tuple[int, ...]

    def __post_init__(self):
        for name in ("i", "j", "i_conj", "j_conj"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        if len(self.i) != len(self.j):
            raise ValueError("row and column tuples of the U factors differ in length")
        if len(self.i_conj) != len(self.j_conj):
            raise ValueError("row and column tuples of the conjugate factors differ in length")

    def validate(self, n: int) -> None:
        for x in self.i + self.j + self.i_conj + self.j_conj:
            if not 1 <= x <= n:
                raise ValueError(f"index {x} outside 1..{n}")


def _matchings(src: tuple[int, ...], dst: tuple[int, ...]) -> list[Permutation]:
    """All sigma with src[k] == dst[sigma(k)] for every k."""
    p = len(src)
    return [
        s for s in all_permutations(p) if all(src[k] == dst[s.images[k] - 1] for k in range(p))
    ]


def haar_monomial_integral(n: int, spec: MonomialSpec) -> Fraction:
    """Exact Haar integral of a monomial in U and conj(U) over U(n)."""
    spec.validate(n)
    p = len(spec.i)
    if p != len(spec.i_conj):
        return Fraction(0)
    if p == 0:
        return Fraction(1)
    _check_regime(n, p, MAX_MONOMIAL_DEGREE)
    row_perms = _matchings(spec.i, spec.i_conj)
    if not row_perms:
        return Fraction(0)
    col_perms = _matchings(spec.j, spec.j_conj)
    table = weingarten_table(n, p)
    total = Fraction(0)
    for sigma in row_perms:
        sigma_inv = sigma.inverse()
        for tau in col_perms:
            total += table[compose(tau, sigma_inv)]
    return total


@dataclass(frozen=True)
class CovarianceForm:
    """Covariance E[x_a x_b] of k jointly Gaussian centred real variables."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(m, m.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        if m.size and np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


def pairings(items: Sequence[int]) -> list[list[tuple[int, int]]]:
    """All perfect matchings of ``items`` (empty list of pairings if odd)."""
    items = list(items)
    if not items:
        return [[]]
    if len(items) % 2:
        return []
    first, rest = items[0], items[1:]
    out = []
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1 :]
        for sub in pairings(remaining):
            out.append([(first, partner)] + sub)
    return out


def wick_moment(form: CovarianceForm, indices: Sequence[int]) -> float:
    """E[x_{a_1} ... x_{a_m}] as the sum over pairings of covariance products.

    ``indices`` are 0-based variable labels and may repeat.
    """
    indices = [int(a) for a in indices]
    for a in indices:
        if not 0 <= a < form.k:
            raise ValueError(f"variable index {a} outside 0..{form.k - 1}")
    if len(indices) % 2:
        return 0.0
    C = form.matrix
    total = 0.0
    for pairing in pairings(range(len(indices))):
        term = 1.0
        for u, v in pairing:
            term *= C[indices[u], indices[v]]
        total += term
    return total

