"""Entanglement criteria (PPT, reduction, realignment), the Gurvits ball and
Monte Carlo threshold experiments over the induced ensemble.

Every criterion is evaluated on the second tensor factor of a state with
split ``(n, k)``: PPT uses [id (x) transp], RED uses [id (x) R] with
R(X) = I Tr X - X.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .ensembles import RandomLike, RandomStream, sample_ginibre
from .freeprob import EmpiricalSpectrum
from .tensorlin import DensityMatrix, partial_trace, partial_transpose, realign, schatten1

__all__ = [
    "CRITERIA",
    "REGIMES",
    "PASS_TOL",
    "CriterionVerdict",
    "evaluate_criterion",
    "gurvits_radius",
    "in_gurvits_ball",
    "gurvits_boundary_state",
    "ThresholdConfig",
    "ThresholdPoint",
    "ThresholdCurve",
    "threshold_scale",
    "reference_threshold",
    "SEP_REFERENCE",
    "threshold_experiment",
    "trial_stream",
    "rescaled_pt_spectrum",
    "CURVE_COLUMNS",
]

CRITERIA = ("PPT", "RED", "RLN")
# "unbalanced" keeps k fixed with n large; "unbalanced-n" keeps n fixed with k large
REGIMES = ("balanced", "unbalanced", "unbalanced-n")
PASS_TOL = 1e-9
MAX_THRESHOLD_DIM = 4096


@dataclass(frozen=True)
class CriterionVerdict:
    criterion: str
    passed: bool
    margin: float


def _state_and_split(rho, dims) -> tuple[np.ndarray, int, int]:
    if isinstance(rho, DensityMatrix):
        dims = dims or rho.split
        rho = rho.data
    if dims is None:
        raise ValueError("a bipartite split (n, k) is required")
    n, k = dims
    return np.asarray(rho), n, k


def _lambda_min(m: np.ndarray) -> float:
    h = (m + m.conj().T) / 2
    return float(scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])[0])


def evaluate_criterion(rho, which: str, dims: tuple[int, int] | None = None, tol: float = PASS_TOL) -> CriterionVerdict:
    """Margin and verdict for one of PPT, RED, RLN; pass iff margin >= -tol."""
    which = which.upper()
    data, n, k = _state_and_split(rho, dims)
    if which == "PPT":
        margin = _lambda_min(partial_transpose(data, "second", (n, k)))
    elif which == "RED":
        reduced = np.kron(partial_trace(data, "second", (n, k)), np.eye(k))
        margin = _lambda_min(reduced - data)
    elif which == "RLN":
        margin = 1.0 - schatten1(realign(data, (n, k)))
    else:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {which!r}")
    return CriterionVerdict(which, margin >= -tol, margin)


# -- Gurvits ball -------------------------------------------------------------


def gurvits_radius(n: int, k: int) -> float:
    """Radius [nk(nk-1)]^(-1/2) of the largest separable Frobenius ball around I/(nk)."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    d = n * k
    if d == 1:
        return math.inf
    return 1.0 / math.sqrt(d * (d - 1))


def in_gurvits_ball(rho, dims: tuple[int, int] | None = None, slack: float = 1e-12) -> bool:
    data, n, k = _state_and_split(rho, dims)
    dist = np.linalg.norm(data - np.eye(n * k) / (n * k))
    return bool(dist <= gurvits_radius(n, k) + slack)


def gurvits_boundary_state(n: int, k: int, rs: RandomLike) -> DensityMatrix:
    """I/(nk) + r H with H a random traceless Hermitian of unit Frobenius norm."""
    d = n * k
    g = sample_ginibre(d, d, rs)
    h = (g + g.conj().T) / 2
    h -= np.trace(h).real / d * np.eye(d)
    h /= np.linalg.norm(h)
    rho = np.eye(d) / d + gurvits_radius(n, k) * h
    return DensityMatrix(rho, (n, k))


# -- threshold experiments ----------------------------------------------------


def threshold_scale(criterion: str, regime: str, n: int, k: int) -> int:
    """Scale factor for s = c * scale in each (criterion, regime)."""
    criterion = criterion.upper()
    table = {
        ("PPT", "balanced"): n * k,
        ("PPT", "unbalanced"): n * k,
        ("RED", "balanced"): n,
        ("RED", "unbalanced"): n * k,
        ("RED", "unbalanced-n"): 1,
        ("RLN", "balanced"): n * k,
        ("RLN", "unbalanced"): 1,
    }
    if (criterion, regime) not in table:
        raise ValueError(f"no threshold scale for criterion {criterion} in regime {regime!r}")
    return table[(criterion, regime)]


def reference_threshold(criterion: str, regime: str, n: int, k: int) -> float:
    """Asymptotic threshold c_0 on the scale of :func:`threshold_scale`."""
    criterion = criterion.upper()
    if criterion == "PPT":
        return 4.0 if regime == "balanced" else 2 + 2 * math.sqrt(1 - 1 / k**2)
    if criterion == "RED":
        if regime == "balanced":
            return 1.0
        if regime == "unbalanced-n":
            return float(n)
        return (1 + math.sqrt(k + 1)) ** 2 / (k * (k - 1)) if k > 1 else math.inf
    if criterion == "RLN":
        return (8 / (3 * math.pi)) ** 2 if regime == "balanced" else float(k * k)
    raise ValueError(f"unknown criterion {criterion!r}")


SEP_REFERENCE = (
    "SEP thresholds (reference only, not simulated): balanced regime, s between "
    "order n^3 and n^3 log^2 n; unbalanced regime with k fixed, s of order n k."
)


@dataclass(frozen=True)
class ThresholdConfig:
    criterion: str
    regime: str
    n: int
    k: int
    c_grid: tuple[float, ...]
    trials: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "criterion", self.criterion.upper())
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        threshold_scale(self.criterion, self.regime, self.n, self.k)
        if self.regime == "balanced" and self.n != self.k:
            raise ValueError("balanced regime requires k = n")
        if self.n < 1 or self.k < 1:
            raise ValueError("n and k must be positive")
        if self.n * self.k > MAX_THRESHOLD_DIM:
            raise ValueError(f"n*k = {self.n * self.k} exceeds guard {MAX_THRESHOLD_DIM}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ValueError("c grid must be non-empty with positive values")

    def s_for(self, c: float) -> int:
        return max(1, int(round(c * threshold_scale(self.criterion, self.regime, self.n, self.k))))


@dataclass(frozen=True)
class ThresholdPoint:
    c: float
    s: int
    trials: int
    pass_fraction: float
    margins: tuple[float, ...] = field(repr=False, default=())


CURVE_COLUMNS = ("criterion", "regime", "n", "k", "c", "s", "trials", "pass_fraction", "seed")


@dataclass(frozen=True)
class ThresholdCurve:
    config: ThresholdConfig
    points: tuple[ThresholdPoint, ...]

    def rows(self) -> list[dict]:
        cfg = self.config
        return [
            {
                "criterion": cfg.criterion,
                "regime": cfg.regime,
                "n": cfg.n,
                "k": cfg.k,
                "c": pt.c,
                "s": pt.s,
                "trials": pt.trials,
                "pass_fraction": pt.pass_fraction,
                "seed": cfg.seed,
            }
            for pt in self.points
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({key: repr(v) if isinstance(v, float) else v for key, v in row.items()})
        return buf.getvalue()


def trial_stream(seed: int, c_index: int, trial: int) -> RandomStream:
    """Stream for one (grid point, trial) pair; independent of scheduling."""
    return RandomStream(seed, (c_index << 32) | trial)


def _induced_matrix(d: int, s: int, rs: RandomLike) -> np.ndarray:
    g = sample_ginibre(d, s, rs)
    w = g @ g.conj().T
    return w / np.trace(w).real


def _trial_margin(cfg: ThresholdConfig, c_index: int, trial: int) -> float:
    s = cfg.s_for(cfg.c_grid[c_index])
    rho = _induced_matrix(cfg.n * cfg.k, s, trial_stream(cfg.seed, c_index, trial))
    return evaluate_criterion(rho, cfg.criterion, (cfg.n, cfg.k)).margin


def threshold_experiment(cfg: ThresholdConfig, threads: int = 1) -> ThresholdCurve:
    """Pass fraction of the criterion over ``trials`` induced states per grid point.

    Results depend only on ``cfg``; ``threads`` changes the wall time only.
    """
    tasks = [(ci, t) for ci in range(len(cfg.c_grid)) for t in range(cfg.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            margins = list(pool.map(lambda task: _trial_margin(cfg, *task), tasks))
    else:
        margins = [_trial_margin(cfg, *task) for task in tasks]
    points = []
    for ci, c in enumerate(cfg.c_grid):
        ms = tuple(margins[ci * cfg.trials : (ci + 1) * cfg.trials])
        frac = sum(m >= -PASS_TOL for m in ms) / cfg.trials
        points.append(ThresholdPoint(c, cfg.s_for(c), cfg.trials, frac, ms))
    return ThresholdCurve(cfg, tuple(points))


def rescaled_pt_spectrum(rho, regime: str = "balanced", s: int | None = None,
                         dims: tuple[int, int] | None = None) -> EmpiricalSpectrum:
    """Eigenvalues of rho^Gamma, rescaled to the limiting-law normalization.

    balanced: multiply by nk (limit SC(1, 1/c) for s = c nk).
    unbalanced: multiply by s k (limit pi_{ck(k+1)/2} boxminus pi_{ck(k-1)/2}
    for s = c nk).
    """
    data, n, k = _state_and_split(rho, dims)
    ev = np.linalg.eigvalsh(partial_transpose((data + data.conj().T) / 2, "second", (n, k)))
    if regime == "balanced":
        scale = n * k
    elif regime == "unbalanced":
        if s is None:
            raise ValueError("unbalanced rescaling needs the induced-measure parameter s")
        scale = s * k
    else:
        raise ValueError(f"regime must be 'balanced' or 'unbalanced', got {regime!r}")
    return EmpiricalSpectrum.from_eigenvalues(ev, scale=float(scale))
