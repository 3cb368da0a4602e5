"""Dense linear algebra for bipartite states.

Index convention
----------------
A split ``(n, k)`` means C^n (x) C^k with the basis vector e_i (x) f_a stored at
flat position ``i * k + a`` -- the ordering produced by ``np.kron``, with the
first factor as the slow index.  A matrix on the product space therefore
reshapes to ``(n, k, n, k)`` with axes ``(i, a, j, b)``.  Every partial
operation in this package (partial trace, partial transpose, realignment,
channel outputs) uses this one convention.

Entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .permcore import Permutation

__all__ = [
    "DensityMatrix",
    "PureState",
    "max_entangled",
    "partial_trace",
    "partial_transpose",
    "realign",
    "entropy",
    "schatten1",
    "trace_sigma",
    "hermitian_part",
    "spectrum",
    "EIG_CLIP",
]

EIG_CLIP = 1e-10


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def spectrum(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the Hermitian part of ``m``."""
    return np.linalg.eigvalsh(hermitian_part(np.asarray(m)))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD unit-trace matrix, optionally carrying a bipartite split."""

    data: np.ndarray
    split: tuple[int, int] | None = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        if self.split is not None:
            n, k = (int(x) for x in self.split)
            if n * k != data.shape[0]:
                raise ValueError(f"split {self.split} incompatible with dimension {data.shape[0]}")
            object.__setattr__(self, "split", (n, k))
        object.__setattr__(self, "data", data)
        if self.check:
            self.validate()

    def validate(self, tol: float = 1e-10) -> None:
        m = self.data
        if np.abs(m - m.conj().T).max(initial=0.0) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"density matrix has trace {np.trace(m).real:.3g}, expected 1")
        if spectrum(m)[0] < -tol:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return spectrum(self.data)

    def with_split(self, n: int, k: int) -> "DensityMatrix":
        return DensityMatrix(self.data, (n, k), check=False)


@dataclass(frozen=True)
class PureState:
    """Unit vector, optionally carrying a bipartite split."""

    amplitudes: np.ndarray
    split: tuple[int, int] | None = None

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError(f"pure state has norm {np.linalg.norm(v):.15g}")
        if self.split is not None and self.split[0] * self.split[1] != v.size:
            raise ValueError(f"split {self.split} incompatible with dimension {v.size}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.split, check=False)


def max_entangled(d: int) -> PureState:
    """omega_d = d^{-1/2} sum_i e_i (x) e_i."""
    if d < 1:
        raise ValueError("d must be at least 1")
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return PureState(v, (d, d))


def _unpack(rho, dims) -> tuple[np.ndarray, int, int]:
    if isinstance(rho, DensityMatrix):
        data = rho.data
        dims = dims or rho.split
    else:
        data = np.asarray(rho)
    if dims is None:
        raise ValueError("a bipartite split (n, k) is required")
    n, k = dims
    if data.shape != (n * k, n * k):
        raise ValueError(f"matrix shape {data.shape} incompatible with split {dims}")
    return data, n, k


def partial_trace(rho, side: str = "second", dims: tuple[int, int] | None = None) -> np.ndarray:
    """Trace out the ``"first"`` or ``"second"`` tensor factor."""
    data, n, k = _unpack(rho, dims)
    t = data.reshape(n, k, n, k)
    if side == "second":
        return np.einsum("iaja->ij", t)
    if side == "first":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"side must be 'first' or 'second', got {side!r}")


def partial_transpose(rho, side: str = "second", dims: tuple[int, int] | None = None) -> np.ndarray:
    """Transpose one tensor factor; ``side="second"`` is [id (x) transp]."""
    data, n, k = _unpack(rho, dims)
    t = data.reshape(n, k, n, k)
    if side == "second":
        t = t.transpose(0, 3, 2, 1)
    elif side == "first":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"side must be 'first' or 'second', got {side!r}")
    return t.reshape(n * k, n * k)


def realign(rho, dims: tuple[int, int] | None = None) -> np.ndarray:
    """Realignment L(e_i e_j* (x) f_a f_b*) = e_i f_a* (x) e_j f_b*, an n^2 x k^2 matrix."""
    data, n, k = _unpack(rho, dims)
    return data.reshape(n, k, n, k).transpose(0, 2, 1, 3).reshape(n * n, k * k)


def entropy(x, p: float = 1.0) -> float:
    """Renyi entropy of order p (von Neumann/Shannon at p=1, min-entropy at inf).

    ``x`` is a probability vector, a square matrix or a :class:`DensityMatrix`.
    Eigenvalues with magnitude below ``EIG_CLIP`` count as exact zeros.
    """
    if p <= 0:
        raise ValueError(f"entropy order must be positive, got {p}")
    if isinstance(x, DensityMatrix):
        lam = x.eigenvalues()
    elif isinstance(x, PureState):
        return 0.0
    else:
        arr = np.asarray(x)
        lam = spectrum(arr) if arr.ndim == 2 else np.asarray(arr, dtype=float)
    lam = np.where(np.abs(lam) <= EIG_CLIP, 0.0, lam)
    if lam.min(initial=0.0) < 0:
        raise ValueError("entropy needs a positive semidefinite input")
    lam = lam[lam > 0]
    if p == 1:
        return float(-np.sum(lam * np.log(lam)))
    if np.isinf(p):
        return float(-np.log(lam.max()))
    return float(np.log(np.sum(lam**p)) / (1 - p))


def schatten1(m: np.ndarray) -> float:
    """Trace norm: sum of singular values."""
    return float(np.linalg.svd(np.asarray(m), compute_uv=False).sum())


def trace_sigma(matrices: Sequence[np.ndarray], sigma: Permutation) -> complex:
    """prod over cycles (i_1 ... i_k) of sigma of Tr(A_{i_1} ... A_{i_k})."""
    mats = [np.asarray(a) for a in matrices]
    if len(mats) != sigma.p:
        raise ValueError(f"{len(mats)} matrices for a permutation of degree {sigma.p}")
    shape = mats[0].shape
    if any(a.shape != shape or a.ndim != 2 or shape[0] != shape[1] for a in mats):
        raise ValueError("trace_sigma needs square matrices of equal size")
    out = 1 + 0j
    for cyc in sigma.cycles():
        prod = mats[cyc[0] - 1]
        for i in cyc[1:]:
            prod = prod @ mats[i - 1]
        out *= np.trace(prod)
    return complex(out)
