"""Entropy-weighted fusion of affinity networks and the three-stage
integration schedule.

One fusion step minimizes, by exact block-coordinate descent,

    - sum_l alpha_l <A_l, S> + 0.5 sum_l alpha_l ||A_l||_F^2
    + beta ||S||_F^2 + lam * tr(F' (I - S) F) + gamma sum_l alpha_l log alpha_l

over row-stochastic S, orthonormal F (n x c), and simplex weights alpha,
with beta = gamma set by the neighborhood-gap statistic of the step's
distance matrix.  Every block update is an exact minimizer, so the
objective trace never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .affinity import affinity_from_distance, check_distance_matrix
from .errors import NumericalFailure
from .numkernel import sym_eig
from .preprocess import default_neighbor_count

GAMMA_FLOOR = 1e-8


@dataclass
class FusionConfig:
    """Knobs of one fusion step.  ``trace_weight`` defaults to gamma."""

    c: int
    gamma: float
    k2: int = 0
    trace_weight: float | None = None
    max_iter: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if self.c < 2:
            raise ValueError(f"c must be >= 2, got {self.c}")
        if not np.isfinite(self.gamma) or self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if self.trace_weight is None:
            self.trace_weight = self.gamma
        if self.trace_weight <= 0.0:
            raise ValueError(f"trace_weight must be positive, got {self.trace_weight}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass
class FusionState:
    """Result of one fusion step: fused row-stochastic network ``s``,
    spectral factor ``f``, view weights ``alpha``, objective trace."""

    s: np.ndarray
    f: np.ndarray
    alpha: np.ndarray
    objective_trace: np.ndarray
    converged: bool


@dataclass
class StageRecord:
    """One scheduled fusion stage: the rr-selected neighbor count, the
    derived scale, the rr scan itself, and the fused state."""

    k2: int
    gamma: float
    k2_grid: np.ndarray
    rr_values: np.ndarray
    state: FusionState


@dataclass
class CandidateRecord:
    """One stage-3 candidate: fused network and diagnostics, or the error
    that felled it."""

    k2: int
    gamma: float
    s: np.ndarray | None
    alpha: np.ndarray | None
    objective: float
    n_iter: int
    error: str | None = None


@dataclass
class ThreeStageResult:
    stage1: StageRecord
    stage2: StageRecord
    candidates: list[CandidateRecord] = field(default_factory=list)
    selected_k2: int = 0
    s_final: np.ndarray | None = None
    eigenvector_count: int = 0


def eigenvector_count(cluster_count: int) -> int:
    """Spectral factor width: the cluster count, except 3 when 2 clusters
    are requested."""
    if cluster_count < 2:
        raise ValueError(f"cluster count must be >= 2, got {cluster_count}")
    return 3 if cluster_count == 2 else cluster_count


def _sorted_offdiag(d: np.ndarray) -> np.ndarray:
    """Rows of d with the diagonal removed, each sorted ascending."""
    n = d.shape[0]
    off = d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    return np.sort(off, axis=1)


def gamma_from_neighbors(d: np.ndarray, k2: int) -> float:
    """Neighborhood-gap scale: mean over samples of
    sum_{n<=k2} (s_{j,k2+1}^2 - s_{j,n}^2) on ascending sorted off-diagonal
    distances."""
    d = check_distance_matrix(d)
    n = d.shape[0]
    if not 1 <= k2 <= n - 2:
        raise ValueError(f"k2={k2} outside [1, {n - 2}]")
    s = _sorted_offdiag(d)
    gap = k2 * s[:, k2] ** 2 - (s[:, :k2] ** 2).sum(axis=1)
    return float(gap.mean())


def rr_select_k2(d: np.ndarray, k2_range: tuple[int, int]) -> tuple[int, np.ndarray]:
    """Scan candidate neighbor counts and score each by
    rr(i) = mean_j (i * s_{j,i+1} - sum_{l=2}^{i+1} s_{j,l}) / 2;
    returns (argmax, scores), smallest index on ties."""
    d = check_distance_matrix(d)
    n = d.shape[0]
    lo, hi = int(k2_range[0]), int(k2_range[1])
    if lo > hi:
        raise ValueError(f"empty k2 range [{lo}, {hi}]")
    if lo < 2 or hi > n - 2:
        raise ValueError(f"k2 range [{lo}, {hi}] outside [2, {n - 2}]")
    s = _sorted_offdiag(d)
    csum = np.cumsum(s, axis=1)
    scores = np.empty(hi - lo + 1)
    for pos, i in enumerate(range(lo, hi + 1)):
        # sum_{l=2}^{i+1} s_{j,l} = csum[:, i] - s[:, 0] (1-indexed l)
        tail = csum[:, i] - s[:, 0]
        scores[pos] = float((i * s[:, i] - tail).mean() / 2.0)
    best = lo + int(np.argmax(scores))
    return best, scores


def _objective(affs, fro2, s, f, alpha, beta, lam, gamma):
    fit = sum(a_l * float(np.vdot(a, s)) for a_l, a in zip(alpha, affs))
    quad = 0.5 * float(alpha @ fro2)
    s_sym = 0.5 * (s + s.T)
    trace_term = float(np.trace(f.T @ f) - np.vdot(f @ f.T, s_sym))
    ent = float(np.sum(np.where(alpha > 0.0, alpha * np.log(np.maximum(alpha, 1e-300)), 0.0)))
    return -fit + quad + beta * float(np.vdot(s, s)) + lam * trace_term + gamma * ent


def fuse_affinities(affinities: list[np.ndarray], config: FusionConfig) -> FusionState:
    """Fuse affinity networks into one row-stochastic matrix by exact
    alternating minimization."""
    if len(affinities) < 1:
        raise ValueError("need at least one affinity matrix")
    affs = [np.asarray(a, dtype=np.float64) for a in affinities]
    n = affs[0].shape[0]
    for a in affs:
        if a.shape != (n, n):
            raise ValueError("affinity matrices must share one square shape")
        if not np.all(np.isfinite(a)):
            raise ValueError("affinity matrices must be finite")
    if config.c > n:
        raise ValueError(f"c={config.c} exceeds sample count {n}")

    L = len(affs)
    beta = config.gamma
    lam = float(config.trace_weight)
    gamma = config.gamma
    fro2 = np.array([float(np.vdot(a, a)) for a in affs])

    alpha = np.full(L, 1.0 / L)
    mean_aff = sum(a_l * a for a_l, a in zip(alpha, affs))
    s = backend.project_rows(mean_aff)
    eye = np.eye(n)
    _, f = sym_eig(eye - 0.5 * (s + s.T), config.c, which="smallest")

    trace = [_objective(affs, fro2, s, f, alpha, beta, lam, gamma)]
    converged = False
    for it in range(config.max_iter):
        # S rows: argmin beta||s||^2 - <w, s> over the simplex
        w = sum(a_l * a for a_l, a in zip(alpha, affs)) + lam * (f @ f.T)
        s = backend.project_rows(w / (2.0 * beta))

        # F: c bottom eigenvectors of I - sym(S)
        _, f = sym_eig(eye - 0.5 * (s + s.T), config.c, which="smallest")

        # alpha: entropic closed form
        errs = np.array([-float(np.vdot(a, s)) for a in affs]) + 0.5 * fro2
        alpha = closed_form_alpha(errs, gamma)

        obj = _objective(affs, fro2, s, f, alpha, beta, lam, gamma)
        if not np.isfinite(obj):
            raise NumericalFailure(f"fusion objective became non-finite at iteration {it + 1}")
        prev = trace[-1]
        trace.append(obj)
        if abs(obj - prev) < config.tol * max(1.0, abs(prev)):
            converged = True
            break

    return FusionState(
        s=s, f=f, alpha=alpha, objective_trace=np.asarray(trace), converged=converged
    )


def closed_form_alpha(errs: np.ndarray, gamma: float) -> np.ndarray:
    """Entropy-regularized weights: alpha_l proportional to exp(-err_l / gamma)."""
    z = -np.asarray(errs, dtype=np.float64) / gamma
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def step_distance(affinities: list[np.ndarray]) -> np.ndarray:
    """Dissimilarity read by the rr scan and the gap scale: one minus the
    symmetrized mean affinity, zero diagonal."""
    mean_aff = np.mean(affinities, axis=0)
    mean_aff = 0.5 * (mean_aff + mean_aff.T)
    d = 1.0 - mean_aff / mean_aff.max()
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def rekernelize(s: np.ndarray, k1: int | None = None) -> np.ndarray:
    """Turn a fused row-stochastic network back into an affinity matrix:
    symmetrize, rescale to a dissimilarity, re-kernelize."""
    s_sym = 0.5 * (s + s.T)
    m = s_sym.max()
    if m <= 0.0:
        raise NumericalFailure("fused network has no positive entries")
    d = 1.0 - s_sym / m
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return affinity_from_distance(d, k1)


def _clamp_range(k2_range: tuple[int, int], n: int, stage: str) -> tuple[int, int]:
    lo = max(2, int(k2_range[0]))
    hi = min(int(k2_range[1]), n - 2)
    if lo > hi:
        raise ValueError(f"{stage}: k2 range [{k2_range[0]}, {k2_range[1]}] is empty for n={n}")
    return lo, hi


def _fuse_stage(
    affs: list[np.ndarray],
    k2_range: tuple[int, int],
    c: int,
    max_iter: int,
    tol: float,
    stage: str,
) -> StageRecord:
    n = affs[0].shape[0]
    lo, hi = _clamp_range(k2_range, n, stage)
    d = step_distance(affs)
    try:
        k2, rr = rr_select_k2(d, (lo, hi))
        gamma = max(gamma_from_neighbors(d, k2), GAMMA_FLOOR)
        cfg = FusionConfig(c=c, gamma=gamma, k2=k2, max_iter=max_iter, tol=tol)
        state = fuse_affinities(affs, cfg)
    except (NumericalFailure, ValueError) as exc:
        raise type(exc)(f"{stage}: {exc}") from exc
    return StageRecord(
        k2=k2,
        gamma=gamma,
        k2_grid=np.arange(lo, hi + 1),
        rr_values=rr,
        state=state,
    )


def three_stage_fuse(
    intra: list[np.ndarray],
    inter: list[np.ndarray],
    cluster_count: int,
    stage1_k2_range: tuple[int, int] = (2, 100),
    stage2_k2_range: tuple[int, int] | None = None,
    stage3_k2_range: tuple[int, int] = (2, 100),
    k1: int | None = None,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> ThreeStageResult:
    """Fuse the three within-dataset networks, the six cross-dataset
    networks, and then their re-kernelized outputs, scanning the stage-3
    neighbor count over ``stage3_k2_range`` and keeping every candidate."""
    if len(intra) != 3:
        raise ValueError(f"expected 3 intra-dataset affinities, got {len(intra)}")
    if len(inter) != 6:
        raise ValueError(f"expected 6 inter-dataset affinities, got {len(inter)}")
    n = np.asarray(intra[0]).shape[0]
    for a in [*intra, *inter]:
        if np.asarray(a).shape != (n, n):
            raise ValueError("all affinity matrices must share one square shape")
    c = eigenvector_count(cluster_count)
    if k1 is None:
        k1 = min(max(default_neighbor_count(n), 1), n - 1)
    if stage2_k2_range is None:
        stage2_k2_range = (2, n + 2)

    stage1 = _fuse_stage(intra, stage1_k2_range, c, max_iter, tol, "stage 1 (intra)")
    stage2 = _fuse_stage(inter, stage2_k2_range, c, max_iter, tol, "stage 2 (inter)")

    try:
        re1 = rekernelize(stage1.state.s, k1)
        re2 = rekernelize(stage2.state.s, k1)
    except (NumericalFailure, ValueError) as exc:
        raise type(exc)(f"stage 3 re-kernelization: {exc}") from exc

    d3 = step_distance([re1, re2])
    lo, hi = _clamp_range(stage3_k2_range, n, "stage 3")
    selected_k2, _ = rr_select_k2(d3, (lo, hi))

    candidates: list[CandidateRecord] = []
    for k2 in range(lo, hi + 1):
        gamma = max(gamma_from_neighbors(d3, k2), GAMMA_FLOOR)
        try:
            cfg = FusionConfig(c=c, gamma=gamma, k2=k2, max_iter=max_iter, tol=tol)
            state = fuse_affinities([re1, re2], cfg)
            candidates.append(
                CandidateRecord(
                    k2=k2,
                    gamma=gamma,
                    s=state.s,
                    alpha=state.alpha,
                    objective=float(state.objective_trace[-1]),
                    n_iter=len(state.objective_trace) - 1,
                )
            )
        except NumericalFailure as exc:
            candidates.append(
                CandidateRecord(
                    k2=k2, gamma=gamma, s=None, alpha=None, objective=np.nan, n_iter=0,
                    error=f"stage 3 candidate k2={k2}: {exc}",
                )
            )

    chosen = next(c_ for c_ in candidates if c_.k2 == selected_k2)
    if chosen.s is None:
        raise NumericalFailure(chosen.error or f"stage 3: selected candidate k2={selected_k2} failed")
    return ThreeStageResult(
        stage1=stage1,
        stage2=stage2,
        candidates=candidates,
        selected_k2=selected_k2,
        s_final=chosen.s,
        eigenvector_count=c,
    )
