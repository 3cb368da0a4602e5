"""Spectral laws, free cumulants and free additive convolution.

Free convolution is handled at the level of free cumulants: the cumulants of
mu boxplus nu are the sums of those of mu and nu.  Moments and cumulants are
related by the non-crossing-partition sum

    m_M = sum_{pi in NC(M)} prod_{blocks B} kappa_{|B|}.

The moment/cumulant functions are written against generic arithmetic, so they
return exact results when fed :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .permcore import noncrossing_partitions

__all__ = [
    "MarchenkoPastur",
    "Semicircle",
    "Atomic",
    "CumulantLaw",
    "SpectralLaw",
    "EmpiricalSpectrum",
    "law_eval",
    "law_density",
    "atom_fraction",
    "law_cdf",
    "law_support",
    "law_moments",
    "free_cumulants",
    "moments_from_cumulants",
    "cumulants_from_moments",
    "free_combine",
    "free_sum",
    "free_difference",
    "free_power",
    "dilate",
    "shift",
    "KPositivity",
    "shifted_semicircle_k_positivity",
    "ks_distance",
    "MAX_MOMENT_ORDER",
    "MAX_CUMULANT_ORDER",
    "ATOM_CUTOFF",
]

MAX_MOMENT_ORDER = 12
MAX_CUMULANT_ORDER = 16
ATOM_CUTOFF = 1e-8


@dataclass(frozen=True)
class MarchenkoPastur:
    """Free Poisson law pi_c: atom max(1-c, 0) at 0 plus a density on [a, b]."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"Marchenko-Pastur parameter must be positive, got {self.c}")

    @property
    def edges(self) -> tuple[float, float]:
        r = math.sqrt(self.c)
        return (1 - r) ** 2, (1 + r) ** 2

    @property
    def atom(self) -> float:
        return max(1.0 - self.c, 0.0)


@dataclass(frozen=True)
class Semicircle:
    """Semicircle law with mean m and variance var, supported on m +- 2 sqrt(var)."""

    m: float
    var: float

    def __post_init__(self):
        if self.var < 0:
            raise ValueError(f"semicircle variance must be non-negative, got {self.var}")


@dataclass(frozen=True)
class Atomic:
    """Finite mixture of point masses."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        points, weights = tuple(self.points), tuple(self.weights)
        if len(points) != len(weights) or not points:
            raise ValueError("atomic law needs equally many points and weights (at least one)")
        if any(w < 0 for w in weights):
            raise ValueError("atomic weights must be non-negative")
        if abs(float(sum(weights)) - 1) > 1e-12:
            raise ValueError(f"atomic weights sum to {float(sum(weights))}, expected 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class CumulantLaw:
    """A law known only through its first free cumulants kappa_1..kappa_M."""

    cumulants: tuple

    def __post_init__(self):
        object.__setattr__(self, "cumulants", tuple(self.cumulants))
        if not self.cumulants:
            raise ValueError("cumulant law needs at least one cumulant")

    @property
    def order(self) -> int:
        return len(self.cumulants)


SpectralLaw = Union[MarchenkoPastur, Semicircle, Atomic, CumulantLaw]


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Sorted eigenvalue sample; ``values = scale * raw + offset``."""

    values: np.ndarray
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).reshape(-1))
        if not np.all(np.isfinite(v)):
            raise ValueError("empirical spectrum contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_eigenvalues(cls, eigenvalues, scale: float = 1.0, offset: float = 0.0) -> "EmpiricalSpectrum":
        return cls(scale * np.asarray(eigenvalues, dtype=float) + offset, scale, offset)

    def __len__(self) -> int:
        return self.values.size

    def moments(self, M: int) -> np.ndarray:
        return np.array([np.mean(self.values**p) for p in range(1, M + 1)])


# -- closed-form laws ---------------------------------------------------------


@lru_cache(maxsize=64)
def _mp_cdf_grid(c: float, points: int = 20001) -> tuple[np.ndarray, np.ndarray]:
    # x = a + (b - a)(1 - cos phi)/2 removes the square-root edges
    a, b = MarchenkoPastur(c).edges
    phi = np.linspace(0.0, np.pi, points)
    x = a + (b - a) * (1 - np.cos(phi)) / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        integrand = ((b - a) ** 2 / 4) * np.sin(phi) ** 2 / (2 * np.pi * x)
    if a == 0:
        integrand[0] = (b - a) / np.pi  # limit as phi -> 0 when a = 0
    cum = cumulative_trapezoid(integrand, phi, initial=0.0)
    # the continuous part has mass min(c, 1); remove the small quadrature error
    cum *= min(c, 1.0) / cum[-1]
    return phi, cum


def _check_closed_form(law) -> None:
    if isinstance(law, CumulantLaw):
        raise TypeError("cumulant laws carry no density; compare them through moments")
    if not isinstance(law, (MarchenkoPastur, Semicircle, Atomic)):
        raise TypeError(f"not a spectral law: {law!r}")


def law_support(law: SpectralLaw) -> tuple[tuple[float, float], tuple[tuple[float, float], ...]]:
    """``((lo, hi), atoms)``: the continuous support and the (point, mass) atoms."""
    _check_closed_form(law)
    if isinstance(law, MarchenkoPastur):
        atoms = ((0.0, law.atom),) if law.atom > 0 else ()
        return law.edges, atoms
    if isinstance(law, Semicircle):
        if law.var == 0:
            return (law.m, law.m), ((law.m, 1.0),)
        r = 2 * math.sqrt(law.var)
        return (law.m - r, law.m + r), ()
    atoms = tuple((float(p), float(w)) for p, w in zip(law.points, law.weights) if w > 0)
    lo = min(p for p, _ in atoms)
    hi = max(p for p, _ in atoms)
    return (lo, hi), atoms


def law_cdf(law: SpectralLaw, x) -> np.ndarray:
    """CDF (atoms included), vectorized over ``x``."""
    _check_closed_form(law)
    x = np.asarray(x, dtype=float)
    if isinstance(law, MarchenkoPastur):
        a, b = law.edges
        phi_grid, cum = _mp_cdf_grid(float(law.c))
        u = np.clip(1 - 2 * (x - a) / (b - a), -1.0, 1.0)
        cont = np.interp(np.arccos(u), phi_grid, cum)
        return np.where(x >= 0, law.atom, 0.0) + cont
    if isinstance(law, Semicircle):
        if law.var == 0:
            return np.where(x >= law.m, 1.0, 0.0)
        u = np.clip((x - law.m) / math.sqrt(law.var), -2.0, 2.0)
        return 0.5 + u * np.sqrt(4 - u**2) / (4 * np.pi) + np.arcsin(u / 2) / np.pi
    pts = np.array([float(p) for p in law.points])
    wts = np.array([float(w) for w in law.weights])
    return (wts[None, :] * (x.reshape(-1, 1) >= pts[None, :])).sum(axis=1).reshape(x.shape)


def law_density(law: SpectralLaw, x) -> np.ndarray:
    """Density of the absolutely continuous part, vectorized over ``x``."""
    _check_closed_form(law)
    x = np.asarray(x, dtype=float)
    if isinstance(law, MarchenkoPastur):
        a, b = law.edges
        inside = (x > a) & (x < b) & (x > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.sqrt(np.clip((b - x) * (x - a), 0, None)) / (2 * np.pi * x)
        return np.where(inside, val, 0.0)
    if isinstance(law, Semicircle):
        if law.var == 0:
            return np.zeros_like(x)
        r2 = 4 * law.var - (x - law.m) ** 2
        return np.where(r2 > 0, np.sqrt(np.clip(r2, 0, None)) / (2 * np.pi * law.var), 0.0)
    return np.zeros_like(x)


def law_eval(law: SpectralLaw, x: float) -> tuple[float, float]:
    """(density, cdf) of a closed-form law at ``x``."""
    return float(law_density(law, x)), float(law_cdf(law, x))


# -- moments and free cumulants -----------------------------------------------


@lru_cache(maxsize=None)
def _nc_profiles(M: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Block-size profiles of NC(M) with multiplicities."""
    counts = Counter(pi.block_sizes() for pi in noncrossing_partitions(M))
    return tuple(sorted(counts.items()))


def moments_from_cumulants(kappa: Sequence, M: int) -> list:
    """m_1..m_M from kappa_1..kappa_M by summing over non-crossing partitions."""
    if not 1 <= M <= MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must lie in 1..{MAX_MOMENT_ORDER}, got {M}")
    kappa = list(kappa)
    if len(kappa) < M:
        raise ValueError(f"need {M} cumulants, got {len(kappa)}")
    out = []
    for order in range(1, M + 1):
        total = 0
        for sizes, mult in _nc_profiles(order):
            term = mult
            for s in sizes:
                term = term * kappa[s - 1]
            total = total + term
        out.append(total)
    return out


def _poly_mul(a: list, b: list, cap: int) -> list:
    out = [0] * min(len(a) + len(b) - 1, cap + 1)
    for i, x in enumerate(a):
        if i > cap:
            break
        for j, y in enumerate(b):
            if i + j > cap:
                break
            out[i + j] = out[i + j] + x * y
    return out


def cumulants_from_moments(moments: Sequence, M: int) -> list:
    """kappa_1..kappa_M from m_1..m_M.

    Uses m_n = sum_s kappa_s [z^(n-s)] (1 + m_1 z + m_2 z^2 + ...)^s, which
    determines kappa_n recursively without enumerating partitions.
    """
    if not 1 <= M <= MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order must lie in 1..{MAX_CUMULANT_ORDER}, got {M}")
    m = list(moments)
    if len(m) < M:
        raise ValueError(f"need {M} moments, got {len(m)}")
    series = [1] + m[:M]
    powers = [[1]]
    for _ in range(M):
        powers.append(_poly_mul(powers[-1], series, M))
    kappa = []
    for n in range(1, M + 1):
        acc = m[n - 1]
        for s in range(1, n):
            coeff = powers[s][n - s] if n - s < len(powers[s]) else 0
            acc = acc - kappa[s - 1] * coeff
        kappa.append(acc)
    return kappa


def law_moments(law: SpectralLaw, M: int) -> list:
    """m_1..m_M of a law."""
    if isinstance(law, Atomic):
        return [sum(w * p**k for p, w in zip(law.points, law.weights)) for k in range(1, M + 1)]
    return moments_from_cumulants(free_cumulants(law, M), M)


def free_cumulants(law: SpectralLaw, M: int) -> list:
    """kappa_1..kappa_M of a law."""
    if not 1 <= M <= MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order must lie in 1..{MAX_CUMULANT_ORDER}, got {M}")
    if isinstance(law, MarchenkoPastur):
        return [law.c] * M
    if isinstance(law, Semicircle):
        return ([law.m, law.var] + [0] * M)[:M]
    if isinstance(law, Atomic):
        return cumulants_from_moments(law_moments(law, M), M)
    if isinstance(law, CumulantLaw):
        if law.order < M:
            raise ValueError(f"law only carries {law.order} cumulants, {M} requested")
        return list(law.cumulants[:M])
    raise TypeError(f"not a spectral law: {law!r}")


def _order_of(*laws, M: int | None) -> int:
    if M is not None:
        return M
    orders = [law.order for law in laws if isinstance(law, CumulantLaw)]
    return min(orders) if orders else MAX_MOMENT_ORDER


def free_sum(a: SpectralLaw, b: SpectralLaw, M: int | None = None) -> CumulantLaw:
    """a boxplus b."""
    M = _order_of(a, b, M=M)
    return CumulantLaw(tuple(x + y for x, y in zip(free_cumulants(a, M), free_cumulants(b, M))))


def free_difference(a: SpectralLaw, b: SpectralLaw, M: int | None = None) -> CumulantLaw:
    """a boxminus b: the law of x - y with x ~ a, y ~ b free."""
    M = _order_of(a, b, M=M)
    kb = free_cumulants(b, M)
    return CumulantLaw(tuple(x + (-1) ** m * y for m, (x, y) in enumerate(zip(free_cumulants(a, M), kb), start=1)))


def free_power(law: SpectralLaw, t, M: int | None = None) -> CumulantLaw:
    """law^{boxplus t}, t > 0."""
    if not t > 0:
        raise ValueError(f"free convolution power must be positive, got {t}")
    M = _order_of(law, M=M)
    return CumulantLaw(tuple(t * k for k in free_cumulants(law, M)))


def dilate(law: SpectralLaw, a, M: int | None = None) -> CumulantLaw:
    """Law of a*x."""
    M = _order_of(law, M=M)
    return CumulantLaw(tuple(a**m * k for m, k in enumerate(free_cumulants(law, M), start=1)))


def shift(law: SpectralLaw, a, M: int | None = None) -> CumulantLaw:
    """Law of x + a."""
    M = _order_of(law, M=M)
    kappa = free_cumulants(law, M)
    kappa[0] = kappa[0] + a
    return CumulantLaw(tuple(kappa))


def free_combine(a: SpectralLaw, b: SpectralLaw | None = None, *, op: str = "sum", scalar=None, M: int | None = None) -> CumulantLaw:
    """Dispatch for ``op`` in {sum, difference, power, dilate, shift}."""
    if op in ("sum", "difference"):
        if b is None:
            raise ValueError(f"free {op} needs two laws")
        return free_sum(a, b, M) if op == "sum" else free_difference(a, b, M)
    if scalar is None:
        raise ValueError(f"operation {op!r} needs a scalar")
    if op == "power":
        return free_power(a, scalar, M)
    if op == "dilate":
        return dilate(a, scalar, M)
    if op == "shift":
        return shift(a, scalar, M)
    raise ValueError(f"unknown free operation {op!r}")


# -- k-positivity via semicircle free powers ----------------------------------


@dataclass(frozen=True)
class KPositivity:
    positive: bool
    margin: float


def shifted_semicircle_k_positivity(n: int, k: int, m: float, sigma: float) -> KPositivity:
    """Support test for SC(m, sigma^2)^{boxplus n/k} = SC(tm, t sigma^2), t = n/k.

    The power is supported in (0, inf) iff t m - 2 sqrt(t) sigma > 0.
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    t = n / k
    margin = t * m - 2 * math.sqrt(t) * sigma
    return KPositivity(margin > 0, margin)


# -- goodness of fit ----------------------------------------------------------


def ks_distance(emp: EmpiricalSpectrum | np.ndarray, law: SpectralLaw) -> float:
    """Kolmogorov-Smirnov distance between an empirical spectrum and a law.

    For Marchenko-Pastur laws with an atom at 0, eigenvalues below
    ``ATOM_CUTOFF`` are dropped and compared against the renormalized
    continuous part; check the atom mass separately with
    :func:`atom_fraction`.
    """
    _check_closed_form(law)
    x = emp.values if isinstance(emp, EmpiricalSpectrum) else np.sort(np.asarray(emp, dtype=float))
    if isinstance(law, MarchenkoPastur) and law.atom > 0:
        x = x[x >= ATOM_CUTOFF]
        if x.size == 0:
            return 1.0
        F = (law_cdf(law, x) - law.atom) / (1 - law.atom)
    else:
        F = law_cdf(law, x)
    n = x.size
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def atom_fraction(emp: EmpiricalSpectrum | np.ndarray, cutoff: float = ATOM_CUTOFF) -> float:
    x = emp.values if isinstance(emp, EmpiricalSpectrum) else np.asarray(emp, dtype=float)
    return float(np.mean(np.abs(x) < cutoff))
