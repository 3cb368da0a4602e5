"""Quantum channels: representations, conjugate-pair outputs, output-entropy
and (t)-norm estimation, and a binary exchange format.

Dimensions: ``d`` input, ``k`` output, ``n`` ancilla (environment).

* Stinespring: isometry ``V`` of shape ``(k * n, d)``; the row index is
  ``a * n + r`` with ``a`` the output and ``r`` the ancilla index, and
  Phi(X) = Tr_ancilla(V X V^*).
* Kraus: array of shape ``(m, k, d)``; the Stinespring form has
  ``L_r = V.reshape(k, n, d)[:, r, :]``.
* Choi: C = sum_ij E_ij (x) Phi(E_ij), input factor first, shape ``(d k, d k)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .ensembles import RandomLike, RandomStream, as_generator, sample_haar_isometry
from .tensorlin import DensityMatrix, PureState, entropy, partial_trace

__all__ = [
    "QuantumChannel",
    "TNormQuery",
    "MoeResult",
    "Membership",
    "OutputBodyEstimate",
    "convert",
    "apply",
    "identity_channel",
    "depolarizing_channel",
    "conjugate_pair_bell_output",
    "bell_output_limit",
    "hayden_winter_bound",
    "moe_estimate",
    "tnorm_estimate",
    "simplex_directions",
    "estimate_output_body",
    "kkt_membership",
    "single_channel_output",
    "write_channel",
    "read_channel",
    "CHANNEL_MAGIC",
    "CHANNEL_FORMAT_VERSION",
]

TP_TOL = 1e-9
REPRESENTATIONS = ("stinespring", "kraus", "choi")


@dataclass(frozen=True)
class QuantumChannel:
    """A CPTP map M_d -> M_k stored in one of three representations."""

    kind: str
    data: np.ndarray
    d: int
    k: int
    n: int

    def __post_init__(self):
        if self.kind not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.kind!r}")
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        expected = {
            "stinespring": (self.k * self.n, self.d),
            "kraus": (self.n, self.k, self.d),
            "choi": (self.d * self.k, self.d * self.k),
        }[self.kind]
        if data.shape != expected:
            raise ValueError(f"{self.kind} data has shape {data.shape}, expected {expected}")
        self.validate()

    # -- constructors

    @classmethod
    def from_isometry(cls, V: np.ndarray, k: int, n: int) -> "QuantumChannel":
        V = np.asarray(V, dtype=complex)
        return cls("stinespring", V, V.shape[1], k, n)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray] | np.ndarray) -> "QuantumChannel":
        L = np.asarray(kraus, dtype=complex)
        if L.ndim == 2:
            L = L[None]
        if L.ndim != 3:
            raise ValueError("Kraus operators must form an array of shape (m, k, d)")
        return cls("kraus", L, L.shape[2], L.shape[1], L.shape[0])

    @classmethod
    def from_choi(cls, C: np.ndarray, d: int, k: int) -> "QuantumChannel":
        return cls("choi", C, d, k, d * k)

    # -- invariants

    def validate(self, tol: float = TP_TOL) -> None:
        if self.kind == "choi":
            C = self.data
            if np.abs(C - C.conj().T).max() > tol:
                raise ValueError("channel is not completely positive: Choi matrix is not Hermitian")
            if np.linalg.eigvalsh((C + C.conj().T) / 2).min() < -tol:
                raise ValueError("channel is not completely positive: Choi matrix is not PSD")
            if np.abs(partial_trace(C, "second", (self.d, self.k)) - np.eye(self.d)).max() > tol:
                raise ValueError("channel is not trace preserving: Tr_out(Choi) != I_d")
            return
        L = self.kraus()
        defect = np.einsum("rai,raj->ij", L.conj(), L) - np.eye(self.d)
        if np.abs(defect).max() > tol:
            raise ValueError(f"channel is not trace preserving: |sum L*L - I| = {np.abs(defect).max():.2e}")

    # -- representations

    def kraus(self) -> np.ndarray:
        """Kraus operators, shape (m, k, d)."""
        if self.kind == "kraus":
            return self.data
        if self.kind == "stinespring":
            return self.data.reshape(self.k, self.n, self.d).transpose(1, 0, 2)
        lam, vecs = np.linalg.eigh((self.data + self.data.conj().T) / 2)
        keep = lam > 1e-12 * max(lam.max(), 1.0)
        ops = [math.sqrt(l) * v.reshape(self.d, self.k).T for l, v in zip(lam[keep], vecs[:, keep].T)]
        return np.array(ops[::-1])

    def stinespring(self) -> np.ndarray:
        if self.kind == "stinespring":
            return self.data
        L = self.kraus()
        return L.transpose(1, 0, 2).reshape(self.k * L.shape[0], self.d)

    def choi(self) -> np.ndarray:
        if self.kind == "choi":
            return self.data
        L = self.kraus()
        # C[(i,a),(j,b)] = sum_r L_r[a,i] conj(L_r[b,j])
        C = np.einsum("rai,rbj->iajb", L, L.conj()).reshape(self.d * self.k, self.d * self.k)
        return (C + C.conj().T) / 2

    def conjugate(self) -> "QuantumChannel":
        """Phi-bar: entrywise conjugated Kraus operators (or isometry)."""
        return QuantumChannel(self.kind, self.data.conj(), self.d, self.k, self.n)

    def __call__(self, rho) -> np.ndarray:
        """Phi applied to a matrix, returned as an array."""
        x = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
        if x.shape != (self.d, self.d):
            raise ValueError(f"input shape {x.shape} does not match channel input dimension {self.d}")
        if self.kind == "choi":
            # Phi(X) = Tr_in[(X^T (x) I) C]
            t = self.data.reshape(self.d, self.k, self.d, self.k)
            return np.einsum("ij,iajb->ab", x, t)
        L = self.kraus()
        return np.einsum("rai,ij,rbj->ab", L, x, L.conj())


def convert(ch: QuantumChannel, to: str) -> QuantumChannel:
    """Re-express a channel in the ``to`` representation."""
    if to == "stinespring":
        V = ch.stinespring()
        return QuantumChannel("stinespring", V, ch.d, ch.k, V.shape[0] // ch.k)
    if to == "kraus":
        return QuantumChannel.from_kraus(ch.kraus())
    if to == "choi":
        return QuantumChannel.from_choi(ch.choi(), ch.d, ch.k)
    raise ValueError(f"unknown representation {to!r}")


def apply(ch: QuantumChannel, rho: DensityMatrix) -> DensityMatrix:
    out = ch(rho)
    return DensityMatrix((out + out.conj().T) / 2, check=False)


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel.from_kraus(np.eye(d)[None])


def depolarizing_channel(d: int) -> QuantumChannel:
    """Completely depolarizing channel X -> Tr(X) I/d with Kraus E_ij / sqrt(d)."""
    ops = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            ops[i * d + j, i, j] = 1 / math.sqrt(d)
    return QuantumChannel.from_kraus(ops)


# -- conjugate pairs ----------------------------------------------------------


def conjugate_pair_bell_output(ch: QuantumChannel) -> DensityMatrix:
    """Z = [Phi (x) Phi-bar](Omega_d), a state on C^k (x) C^k."""
    if ch.kind != "stinespring":
        raise ValueError("conjugate pair output needs a channel in isometry (Stinespring) form")
    d, k, n = ch.d, ch.k, ch.n
    V = ch.data
    gram = (V @ V.conj().T).reshape(k, n, k, n)
    # psi[(a,b),(r,s)] = d^-1/2 sum_i V[(a,r),i] conj(V[(b,s),i])
    psi = gram.transpose(0, 2, 1, 3).reshape(k * k, n * n) / math.sqrt(d)
    Z = psi @ psi.conj().T
    Z = (Z + Z.conj().T) / 2
    return DensityMatrix(Z, (k, k), check=False)


def bell_output_limit(k: int, t: float) -> np.ndarray:
    """Limiting spectrum of Z: t + (1-t)/k^2 once, (1-t)/k^2 with multiplicity k^2 - 1."""
    rest = (1 - t) / k**2
    return np.array([t + rest] + [rest] * (k * k - 1))


def hayden_winter_bound(ch: QuantumChannel) -> float:
    """Lower bound d/(nk) on the largest eigenvalue of the conjugate-pair output."""
    return ch.d / (ch.n * ch.k)


# -- minimum output entropy ---------------------------------------------------

_EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class MoeResult:
    value: float
    state: PureState
    output_spectrum: np.ndarray
    restart_values: tuple[float, ...]


def _entropy_and_grad(Y: np.ndarray, p: float) -> tuple[float, np.ndarray]:
    lam, U = np.linalg.eigh((Y + Y.conj().T) / 2)
    lam = np.clip(lam, 0.0, None)
    H = entropy(lam, p)
    fl = np.maximum(lam, _EIG_FLOOR)
    if p == 1:
        g = -(np.log(fl) + 1)
    elif np.isinf(p):
        g = np.zeros_like(lam)
        g[-1] = -1 / fl[-1]
    else:
        g = p * fl ** (p - 1) / ((1 - p) * np.sum(fl**p))
    return H, (U * g) @ U.conj().T


def _restart_generators(rs: RandomLike, count: int) -> list[np.random.Generator]:
    if isinstance(rs, RandomStream):
        return [rs.substream(i).generator() for i in range(count)]
    seeds = as_generator(rs).integers(0, 2**63, size=count)
    return [np.random.default_rng(int(s)) for s in seeds]


def moe_estimate(
    ch: QuantumChannel,
    p: float = 1.0,
    restarts: int = 50,
    iterations: int = 200,
    rs: RandomLike | None = None,
    gradient: str = "analytic",
    fd_step: float = 1e-5,
    tol: float = 1e-12,
) -> MoeResult:
    """Upper bound on the minimum output entropy by multi-start descent.

    Each restart runs Riemannian gradient descent over pure inputs x on the
    unit sphere of C^d, with Armijo backtracking.  ``gradient="numeric"``
    replaces the closed-form gradient by central differences of step
    ``fd_step``.  The best value over restarts is returned, so the result is
    non-increasing in ``restarts``.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    if gradient not in ("analytic", "numeric"):
        raise ValueError(f"gradient must be 'analytic' or 'numeric', got {gradient!r}")
    if rs is None:
        rs = RandomStream(0)
    V = ch.stinespring()
    k, d = ch.k, ch.d

    def output(x):
        y = (V @ x).reshape(k, -1)
        return y @ y.conj().T

    def value(x):
        x = x / np.linalg.norm(x)
        return _entropy_and_grad(output(x), p)[0]

    def value_and_grad(x):
        y = (V @ x).reshape(k, -1)
        H, G = _entropy_and_grad(y @ y.conj().T, p)
        if gradient == "analytic":
            # gradient of Tr f(Y) with Y = y y^*, y = V x
            g = 2 * (V.conj().T @ (G @ y).reshape(-1))
        else:
            g = np.zeros(d, dtype=complex)
            for i in range(d):
                for unit in (1.0, 1j):
                    e = np.zeros(d, dtype=complex)
                    e[i] = unit * fd_step
                    deriv = (value(x + e) - value(x - e)) / (2 * fd_step)
                    g[i] += unit * deriv
        g = g - np.vdot(x, g).real * x
        return H, g

    best_val, best_x, values = np.inf, None, []
    for gen in _restart_generators(rs, restarts):
        x = gen.standard_normal(d) + 1j * gen.standard_normal(d)
        x /= np.linalg.norm(x)
        H, g = value_and_grad(x)
        step = 1.0
        for _ in range(iterations):
            gnorm2 = np.vdot(g, g).real
            if gnorm2 < tol:
                break
            step = min(step * 2, 1e3)
            while step > 1e-12:
                cand = x - step * g
                cand /= np.linalg.norm(cand)
                Hc = value(cand)
                if Hc <= H - 1e-4 * step * gnorm2:
                    break
                step /= 2
            else:
                break
            if H - Hc < 1e-15:
                x, H = cand, min(H, Hc)
                break
            x = cand
            H, g = value_and_grad(x)
        values.append(H)
        if H < best_val:
            best_val, best_x = H, x
    spec = np.linalg.eigvalsh(output(best_x))[::-1]
    return MoeResult(float(best_val), PureState(best_x / np.linalg.norm(best_x)), spec, tuple(values))


# -- (t)-norms and the output body K_{k,t} -----------------------------------


@dataclass(frozen=True)
class TNormQuery:
    """Estimate of ||a||_(t) from compressions of diag(a) (x) I_n."""

    a: tuple[float, ...]
    t: float
    n: int
    trials: int = 11

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        if not self.a:
            raise ValueError("direction a must be non-empty")
        if not 0 < self.t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if self.n < self.k:
            raise ValueError(f"simulation size n={self.n} must be at least k={self.k}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n * self.k > 4096:
            raise ValueError(f"n*k = {self.n * self.k} exceeds guard 4096")

    @property
    def k(self) -> int:
        return len(self.a)


def _compression_blocks(k: int, n: int, t: float, trials: int, rs: RandomLike) -> list[np.ndarray]:
    """Per trial, B_i = Q^*(E_ii (x) I_n)Q for a Haar isometry Q of rank round(t n k)."""
    rank = max(1, int(round(t * n * k)))
    gens = _restart_generators(rs, trials)
    blocks = []
    for gen in gens:
        Q = sample_haar_isometry(n * k, rank, gen).reshape(k, n, rank)
        blocks.append(np.einsum("inx,iny->ixy", Q.conj(), Q))
    return blocks


def _tnorms(directions: np.ndarray, blocks: list[np.ndarray]) -> np.ndarray:
    out = np.empty((len(blocks), len(directions)))
    for j, B in enumerate(blocks):
        for idx, a in enumerate(directions):
            M = np.tensordot(a, B, axes=1)
            out[j, idx] = np.linalg.eigvalsh((M + M.conj().T) / 2)[-1]
    return np.median(out, axis=0)


def tnorm_estimate(q: TNormQuery, rs: RandomLike) -> float:
    """Median over trials of the top eigenvalue of P(diag(a) (x) I_n)P."""
    if q.t == 1:
        return max(q.a)
    blocks = _compression_blocks(q.k, q.n, q.t, q.trials, rs)
    return float(_tnorms(np.array([q.a]), blocks)[0])


def simplex_directions(k: int, count: int) -> np.ndarray:
    """The k vertices plus ``count`` unscrambled Sobol points mapped onto the simplex."""
    vertices = np.eye(k)
    if k == 1 or count <= 0:
        return vertices
    m = max(0, math.ceil(math.log2(count)))
    u = qmc.Sobol(d=k - 1, scramble=False).random_base2(m)[:count]
    u = np.sort(u, axis=1)
    pts = np.diff(np.concatenate([np.zeros((len(u), 1)), u, np.ones((len(u), 1))], axis=1), axis=1)
    return np.concatenate([vertices, pts])


@dataclass(frozen=True)
class Membership:
    member: bool
    margin: float
    tol: float


@dataclass(frozen=True)
class OutputBodyEstimate:
    """Estimated support function of K_{k,t} on a fixed set of directions."""

    k: int
    t: float
    n: int
    directions: np.ndarray
    norms: np.ndarray

    def margin(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        return float(np.min(self.norms - self.directions @ lam))

    def membership(self, lam, tol: float = 0.03) -> Membership:
        lam = _check_simplex(lam, self.k)
        m = self.margin(lam)
        return Membership(m >= -tol, m, tol)


def estimate_output_body(k: int, t: float, n: int, direction_count: int = 64, trials: int = 11,
                         rs: RandomLike | None = None) -> OutputBodyEstimate:
    TNormQuery((1.0,) * k, t, n, trials)  # validates the parameters
    directions = simplex_directions(k, direction_count)
    if t == 1:
        norms = directions.max(axis=1)
    else:
        blocks = _compression_blocks(k, n, t, trials, rs if rs is not None else RandomStream(0))
        norms = _tnorms(directions, blocks)
    return OutputBodyEstimate(k, t, n, directions, norms)


def _check_simplex(lam, k: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != k:
        raise ValueError(f"vector has length {lam.size}, expected {k}")
    if lam.min() < -1e-10 or abs(lam.sum() - 1) > 1e-10:
        raise ValueError("vector is not a probability vector")
    return lam


def kkt_membership(lam, t: float, n: int = 300, direction_count: int = 64, trials: int = 11,
                   rs: RandomLike | None = None, tol: float = 0.03,
                   body: OutputBodyEstimate | None = None) -> Membership:
    """Test lam in K_{k,t}: <lam, a> <= ||a||_(t) over sampled directions a.

    Pass a precomputed ``body`` to test many vectors against the same estimate.
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    _check_simplex(lam, lam.size)
    if body is None:
        body = estimate_output_body(lam.size, t, n, direction_count, trials, rs)
    return body.membership(lam, tol)


# -- one-channel model --------------------------------------------------------


def single_channel_output(X: np.ndarray, k: int, rs: RandomLike) -> np.ndarray:
    """Z = Phi(X / Tr X) with Phi(X) = Tr_k[U (X (x) E_11) U^*], U Haar on C^n (x) C^k."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    # U (x (x) f_1) only involves n columns of U: a Haar isometry C^n -> C^n (x) C^k
    W = sample_haar_isometry(n * k, n, rs)
    Y = W @ (X / np.trace(X)) @ W.conj().T
    Z = partial_trace(Y, "second", (n, k))
    return (Z + Z.conj().T) / 2


# -- binary exchange format ---------------------------------------------------

CHANNEL_MAGIC = b"RMTQCHN\x00"
CHANNEL_FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sQQQQQQQ")


def write_channel(path: str | Path, ch: QuantumChannel) -> None:
    """Write the Kraus form; see docs/channel_format.md for the layout."""
    L = ch.kraus()
    header = _HEADER.pack(CHANNEL_MAGIC, CHANNEL_FORMAT_VERSION, ch.d, ch.k, ch.n, L.shape[0], 0, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(L, dtype="<c16").tobytes())


def read_channel(path: str | Path) -> QuantumChannel:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a channel header")
    magic, version, d, k, _n, m, _, _ = _HEADER.unpack_from(raw)
    if magic != CHANNEL_MAGIC:
        raise ValueError("not a channel file (bad magic)")
    if version != CHANNEL_FORMAT_VERSION:
        raise ValueError(f"unsupported channel format version {version}")
    expected = _HEADER.size + 16 * m * k * d
    if len(raw) != expected:
        raise ValueError(f"channel file has {len(raw)} bytes, expected {expected}")
    L = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(m, k, d).astype(complex)
    return QuantumChannel.from_kraus(L)
