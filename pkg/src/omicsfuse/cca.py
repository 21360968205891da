"""Canonical correlation analysis between omics blocks and the
sample-level distances derived from the paired canonical variates.

Each block is centered and whitened through its thin SVD; the canonical
structure is the SVD of the whitened cross-product, so correlations are
singular values of an orthonormal core and land in [0, 1] by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import AlignmentError, DegenerateInputError
from .numkernel import svd_thin
from .preprocess import OmicsMatrix

RELATIVE_RANK_TOL = 1e-10

# (predictor, response) kind pairs in canonical report order
DIRECTED_PAIR_ORDER = [
    ("mirna", "gene_expression"),
    ("gene_expression", "mirna"),
    ("mirna", "methylation"),
    ("methylation", "mirna"),
    ("gene_expression", "methylation"),
    ("methylation", "gene_expression"),
]

# same pattern by input position, used when kinds are not the canonical three
_POSITIONAL_ORDER = [(1, 0), (0, 1), (1, 2), (2, 1), (0, 2), (2, 0)]


@dataclass
class CcaResult:
    """Canonical variates (samples x rank, per block) and their
    correlations, descending."""

    x_variates: np.ndarray
    y_variates: np.ndarray
    correlations: np.ndarray
    rank: int


@dataclass(frozen=True)
class DirectedPair:
    predictor: str
    response: str

    def label(self) -> str:
        return f"{self.predictor}__to__{self.response}"


def _center_and_whiten(block: np.ndarray, name: str) -> np.ndarray:
    centered = block - block.mean(axis=0)
    factors = svd_thin(centered)
    s = factors.singular_values
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateInputError(f"{name} block has zero variance after centering")
    keep = s > RELATIVE_RANK_TOL * s[0]
    if not np.any(keep):
        raise DegenerateInputError(f"{name} block has zero variance after centering")
    return factors.u[:, keep]


def cca_fit(x: np.ndarray, y: np.ndarray) -> CcaResult:
    """Canonical correlation analysis of two sample-aligned blocks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("cca_fit expects 2-D blocks")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"cca_fit needs at least 3 samples, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("cca_fit expects finite, fully observed blocks")

    ux = _center_and_whiten(x, "x")
    uy = _center_and_whiten(y, "y")
    core = svd_thin(ux.T @ uy)
    corr = np.clip(core.singular_values, 0.0, 1.0)
    if corr.size and corr[0] > 0.0:
        rank = int(np.sum(core.singular_values > RELATIVE_RANK_TOL * core.singular_values[0]))
    else:
        rank = 0
    wx = ux @ core.u[:, :rank]
    wy = uy @ core.vt[:rank, :].T
    return CcaResult(x_variates=wx, y_variates=wy, correlations=corr[:rank], rank=rank)


def canonical_distance_matrix(result: CcaResult) -> np.ndarray:
    """Euclidean distances between samples in the concatenated canonical
    coordinates of both blocks."""
    joint = np.hstack([result.x_variates, result.y_variates])
    d2 = backend.pairwise_sq_dists(joint) if joint.shape[1] else np.zeros(
        (joint.shape[0], joint.shape[0])
    )
    d = np.sqrt(np.maximum(d2, 0.0))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def all_directed_pair_distances(
    omics: list[OmicsMatrix],
) -> list[tuple[DirectedPair, np.ndarray]]:
    """Canonical-variate distance matrices for all six directed pairs of
    the three omics blocks, in canonical report order."""
    if len(omics) != 3:
        raise ValueError(f"expected exactly 3 omics matrices, got {len(omics)}")
    ids0 = omics[0].sample_ids
    for other in omics[1:]:
        if other.sample_ids != ids0:
            a, b = set(ids0), set(other.sample_ids)
            only_a = sorted(a - b)
            only_b = sorted(b - a)
            if only_a or only_b:
                raise AlignmentError(
                    f"sample sets differ between {omics[0].kind} and {other.kind}: "
                    f"only in {omics[0].kind}: {only_a[:10]}, "
                    f"only in {other.kind}: {only_b[:10]}"
                )
            raise AlignmentError(
                f"sample order differs between {omics[0].kind} and {other.kind}"
            )
    for m in omics:
        if m.missing_mask.any():
            raise ValueError(f"{m.kind} still has missing cells; impute first")

    kinds = [m.kind for m in omics]
    if set(kinds) == {"gene_expression", "mirna", "methylation"}:
        by_kind = {m.kind: m for m in omics}
        pairs = [(by_kind[p], by_kind[r]) for p, r in DIRECTED_PAIR_ORDER]
        names = {id(m): m.kind for m in omics}
    else:
        pairs = [(omics[i], omics[j]) for i, j in _POSITIONAL_ORDER]
        # disambiguate repeated kinds by position
        names = {id(m): f"{m.kind}{i}" for i, m in enumerate(omics)}

    out = []
    for pred, resp in pairs:
        res = cca_fit(pred.values, resp.values)
        dist = canonical_distance_matrix(res)
        out.append((DirectedPair(predictor=names[id(pred)], response=names[id(resp)]), dist))
    return out
