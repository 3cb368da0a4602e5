"""Seeded samplers for the random matrices, states and channels used here.

Every sampler takes ``rs``, either a :class:`RandomStream` or an existing
``numpy.random.Generator``.  A ``RandomStream`` is a Philox (counter-based)
key: the same ``(seed, stream_id)`` always reproduces the same draws, and
independent trials use distinct stream ids, so results do not depend on the
order in which trials run.

Complex Gaussians are normalized so that E|g|^2 = 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .tensorlin import DensityMatrix, PureState

__all__ = [
    "RandomStream",
    "as_generator",
    "GraphStateSpec",
    "MpsSpec",
    "sample_ginibre",
    "sample_wishart",
    "sample_haar_unitary",
    "sample_haar_isometry",
    "sample_pure_uniform",
    "sample_induced",
    "induced_batch",
    "sample_bures",
    "sample_graph_state_marginal",
    "graph_state_vector",
    "boundary_volume",
    "adapted_example_spec",
    "sample_random_isometry_channel",
    "sample_mps_bulk_marginal",
    "mps_tensors",
    "sample_product_projection_sum",
]

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomStream:
    """A reproducible random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & MASK64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *labels: int) -> "RandomStream":
        """Derive a child stream; distinct label tuples give distinct streams."""
        ss = np.random.SeedSequence([self.stream_id, *(int(x) & MASK64 for x in labels)])
        child_id = int(ss.generate_state(1, dtype=np.uint64)[0])
        return RandomStream(self.seed, child_id)


RandomLike = Union[RandomStream, np.random.Generator]


def as_generator(rs: RandomLike) -> np.random.Generator:
    if isinstance(rs, RandomStream):
        return rs.generator()
    if isinstance(rs, np.random.Generator):
        return rs
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rs).__name__}")


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2)


def sample_ginibre(d: int, s: int, rs: RandomLike, size: int | None = None) -> np.ndarray:
    """d x s matrix of i.i.d. standard complex Gaussians (batched if ``size``)."""
    if d < 1 or s < 1:
        raise ValueError("Ginibre dimensions must be positive")
    shape = (d, s) if size is None else (size, d, s)
    return _complex_normal(as_generator(rs), shape)


def sample_wishart(d: int, s: int, rs: RandomLike, size: int | None = None) -> np.ndarray:
    """W = G G^* with G a d x s Ginibre matrix."""
    g = sample_ginibre(d, s, rs, size)
    return g @ np.swapaxes(g.conj(), -1, -2)


def _qr_haar(z: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def sample_haar_unitary(n: int, rs: RandomLike, size: int | None = None) -> np.ndarray:
    """Haar unitary via QR of a Ginibre matrix with the R-diagonal phase fix."""
    if n < 1:
        raise ValueError("n must be positive")
    return _qr_haar(sample_ginibre(n, n, rs, size))


def sample_haar_isometry(rows: int, cols: int, rs: RandomLike) -> np.ndarray:
    """Haar isometry C^cols -> C^rows, distributed as the first ``cols``
    columns of a Haar unitary of size ``rows``."""
    if cols > rows:
        raise ValueError(f"isometry needs cols <= rows, got {cols} > {rows}")
    return _qr_haar(sample_ginibre(rows, cols, rs))


def sample_pure_uniform(d: int, rs: RandomLike, split: tuple[int, int] | None = None) -> PureState:
    """Uniform unit vector in C^d: a normalized complex Gaussian vector."""
    if d < 1:
        raise ValueError("d must be positive")
    g = _complex_normal(as_generator(rs), (d,))
    return PureState(g / np.linalg.norm(g), split)


def induced_batch(d: int, s: int, size: int, rs: RandomLike) -> np.ndarray:
    """``size`` draws from the induced measure nu_{d,s}, shape (size, d, d)."""
    w = sample_wishart(d, s, rs, size)
    tr = np.trace(w, axis1=-2, axis2=-1).real
    return w / tr[:, None, None]


def sample_induced(d: int, s: int, rs: RandomLike, split: tuple[int, int] | None = None) -> DensityMatrix:
    """rho = G G^* / Tr(G G^*) with G a d x s Ginibre matrix."""
    g = sample_ginibre(d, s, rs)
    w = g @ g.conj().T
    w = (w + w.conj().T) / 2
    return DensityMatrix(w / np.trace(w).real, split, check=False)


def sample_bures(d: int, rs: RandomLike, split: tuple[int, int] | None = None) -> DensityMatrix:
    """(I + U) A A^* (I + U)^*, normalized; A Ginibre, U Haar, independent."""
    rng = as_generator(rs)
    a = sample_ginibre(d, d, rng)
    u = sample_haar_unitary(d, rng)
    m = (np.eye(d) + u) @ a
    w = m @ m.conj().T
    w = (w + w.conj().T) / 2
    return DensityMatrix(w / np.trace(w).real, split, check=False)


# -- random graph states ------------------------------------------------------


@dataclass(frozen=True)
class GraphStateSpec:
    """Graph state on ``vertex_count`` vertices with one C^N (x) C^N Bell pair
    per edge.

    Subsystem ``2j`` is the end of edge ``j`` at ``edges[j][0]`` and
    subsystem ``2j + 1`` the end at ``edges[j][1]``.  ``assignment[x]`` is
    ``"S"`` (kept) or ``"T"`` (traced out) for each subsystem ``x``.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    N: int
    assignment: tuple[str, ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "assignment", tuple(self.assignment))
        for u, v in edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
        if len(self.assignment) != 2 * len(edges):
            raise ValueError(f"assignment must label all {2 * len(edges)} subsystems")
        if any(a not in ("S", "T") for a in self.assignment):
            raise ValueError("assignment labels must be 'S' or 'T'")
        if self.N < 1:
            raise ValueError("local dimension N must be positive")

    def vertex_legs(self, v: int) -> list[int]:
        return [2 * j + side for j, e in enumerate(self.edges) for side in (0, 1) if e[side] == v]

    @property
    def kept(self) -> list[int]:
        return [x for x, a in enumerate(self.assignment) if a == "S"]

    def is_adapted(self) -> bool:
        """Each vertex has either all or none of its subsystems traced out."""
        for v in range(self.vertex_count):
            labels = {self.assignment[x] for x in self.vertex_legs(v)}
            if len(labels) > 1:
                return False
        return True


GRAPH_STATE_MAX_TOTAL = 2**20
GRAPH_STATE_MAX_KEPT = 4096


def graph_state_vector(spec: GraphStateSpec, rs: RandomLike) -> np.ndarray:
    """phi_G = (prod_v U_v)(prod_edges omega_N), as a tensor with 2m legs."""
    m = len(spec.edges)
    if spec.N ** (2 * m) > GRAPH_STATE_MAX_TOTAL:
        raise ValueError(f"graph state of dimension N^(2m) = {spec.N ** (2 * m)} exceeds guard 2^20")
    rng = as_generator(rs)
    omega = np.eye(spec.N, dtype=complex).reshape(-1) / np.sqrt(spec.N)
    psi = np.ones(1, dtype=complex)
    for _ in range(m):
        psi = np.kron(psi, omega)
    psi = psi.reshape((spec.N,) * (2 * m))
    for v in range(spec.vertex_count):
        legs = spec.vertex_legs(v)
        if not legs:
            continue
        u = sample_haar_unitary(spec.N ** len(legs), rng)
        moved = np.moveaxis(psi, legs, range(len(legs)))
        shape = moved.shape
        moved = (u @ moved.reshape(u.shape[0], -1)).reshape(shape)
        psi = np.moveaxis(moved, range(len(legs)), legs)
    return psi


def sample_graph_state_marginal(spec: GraphStateSpec, rs: RandomLike) -> DensityMatrix:
    """rho_{G,S}: the graph state with the T subsystems traced out."""
    kept = spec.kept
    if spec.N ** len(kept) > GRAPH_STATE_MAX_KEPT:
        raise ValueError(f"marginal dimension N^|S| = {spec.N ** len(kept)} exceeds guard {GRAPH_STATE_MAX_KEPT}")
    psi = graph_state_vector(spec, rs)
    traced = [x for x in range(psi.ndim) if x not in kept]
    mat = np.transpose(psi, kept + traced).reshape(spec.N ** len(kept), -1)
    rho = mat @ mat.conj().T
    return DensityMatrix((rho + rho.conj().T) / 2, check=False)


def boundary_volume(spec: GraphStateSpec, max_assignments: int = 1 << 16) -> int:
    """max over relabelings alpha of the number of edges crossing S/T.

    alpha keeps, at every vertex, the number of kept and traced subsystems
    fixed; for adapted marginals it is just the number of S-T edges.
    """
    per_vertex = []
    total = 1
    for v in range(spec.vertex_count):
        legs = spec.vertex_legs(v)
        n_kept = sum(1 for x in legs if spec.assignment[x] == "S")
        choices = [set(c) for c in itertools.combinations(legs, n_kept)]
        per_vertex.append(choices)
        total *= len(choices)
    if total > max_assignments:
        raise ValueError(f"{total} relabelings exceed the enumeration guard {max_assignments}")
    best = 0
    for combo in itertools.product(*per_vertex):
        kept = set().union(*combo) if combo else set()
        crossings = sum(1 for j in range(len(spec.edges)) if ((2 * j) in kept) != ((2 * j + 1) in kept))
        best = max(best, crossings)
    return best


def adapted_example_spec(N: int) -> GraphStateSpec:
    """An adapted marginal with five boundary edges.

    Kept vertices A=0, B=1 share one internal edge; traced vertices C=2, D=3,
    E=4.  Boundary edges: A-C, A-D, A-E, B-C, B-D.  The marginal is a unitary
    rotation of I/N^5 tensored with a pure state, so H = 5 log N exactly.
    """
    edges = ((0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3))
    vertex_kept = {0: "S", 1: "S", 2: "T", 3: "T", 4: "T"}
    assignment = tuple(vertex_kept[e[side]] for e in edges for side in (0, 1))
    return GraphStateSpec(5, edges, N, assignment)


# -- random isometry channels -------------------------------------------------


def sample_random_isometry_channel(n: int, k: int, d: int, rs: RandomLike):
    """Channel X -> Tr_n(V X V^*) with V: C^d -> C^k (x) C^n a Haar isometry."""
    from .channels import QuantumChannel

    if d > n * k:
        raise ValueError(f"input dimension d={d} exceeds n*k={n * k}")
    v = sample_haar_isometry(n * k, d, rs)
    return QuantumChannel.from_isometry(v, k=k, n=n)


# -- random matrix product states ---------------------------------------------


@dataclass(frozen=True)
class MpsSpec:
    """Bulk of a random MPS: physical dim d, bond dim D, window l, bulk length N.

    ``L`` (PSD, operator norm <= 1) and ``R`` (PSD, unit trace) default to
    I_D and I_D / D.
    """

    d: int
    D: int
    l: int
    N: int
    L: np.ndarray | None = field(default=None, compare=False)
    R: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if min(self.d, self.D, self.l, self.N) < 1:
            raise ValueError("MPS dimensions must be positive")
        if self.l > self.N:
            raise ValueError("window length l exceeds the bulk length N")
        if self.d * self.D > 512:
            raise ValueError(f"d*D = {self.d * self.D} exceeds guard 512")
        if self.d**self.l > 256:
            raise ValueError(f"d^l = {self.d ** self.l} exceeds guard 256")
        L = np.eye(self.D, dtype=complex) if self.L is None else np.asarray(self.L, dtype=complex)
        R = np.eye(self.D, dtype=complex) / self.D if self.R is None else np.asarray(self.R, dtype=complex)
        for name, m in (("L", L), ("R", R)):
            if m.shape != (self.D, self.D) or np.abs(m - m.conj().T).max() > 1e-10:
                raise ValueError(f"{name} must be a Hermitian D x D matrix")
            if np.linalg.eigvalsh(m).min() < -1e-10:
                raise ValueError(f"{name} must be positive semidefinite")
        if np.linalg.eigvalsh(L).max() > 1 + 1e-10:
            raise ValueError("L must have operator norm at most 1")
        if abs(np.trace(R) - 1) > 1e-10:
            raise ValueError("R must have unit trace")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)


def mps_tensors(d: int, D: int, rs: RandomLike) -> np.ndarray:
    """A_i, i < d, cut from a Haar unitary on C^d (x) C^D; shape (d, D, D).

    The blocks satisfy sum_i A_i^* A_i = I, so X -> sum_i A_i X A_i^* is
    trace preserving.
    """
    u = sample_haar_unitary(d * D, rs)
    # rows (i, alpha), columns (0, beta): A_i = <i| U |0>
    return u.reshape(d, D, d, D)[:, :, 0, :]


def sample_mps_bulk_marginal(spec: MpsSpec, rs: RandomLike) -> DensityMatrix:
    """Reduced state of ``l`` central sites of the bulk state, unit trace."""
    A = mps_tensors(spec.d, spec.D, rs)
    left_sites = (spec.N - spec.l) // 2
    right_sites = spec.N - spec.l - left_sites
    L, R = spec.L, spec.R
    for _ in range(left_sites):
        L = np.einsum("iba,bc,icd->ad", A.conj(), L, A)
    for _ in range(right_sites):
        R = np.einsum("iab,bc,idc->ad", A, R, A.conj())
    # window words A_{i_1} ... A_{i_l}
    words = A
    for _ in range(spec.l - 1):
        words = np.einsum("wab,ibc->wiac", words, A).reshape(-1, spec.D, spec.D)
    y = L @ words @ R
    rho = y.reshape(len(words), -1) @ words.reshape(len(words), -1).conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, check=False)


# -- sums of random product projections ---------------------------------------


def sample_product_projection_sum(d: int, k: int, p: int, rs: RandomLike) -> np.ndarray:
    """sum_{i<p} P_i^(1) (x) ... (x) P_i^(k), independent uniform rank-one projections."""
    if d**k > 4096:
        raise ValueError(f"d^k = {d ** k} exceeds guard 4096")
    if p < 1:
        raise ValueError("p must be positive")
    rng = as_generator(rs)
    vecs = None
    for _ in range(k):
        x = _complex_normal(rng, (p, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        vecs = x if vecs is None else (vecs[:, :, None] * x[:, None, :]).reshape(p, -1)
    m = vecs.T @ vecs.conj()
    return (m + m.conj().T) / 2

