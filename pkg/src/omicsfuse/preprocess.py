"""Per-dataset preprocessing: sparse-feature removal, KNN imputation,
Z-score standardization, and monotone power transforms.

The fixed pipeline order is filter -> impute -> zscore -> power
transform -> select (selection lives in :mod:`omicsfuse.bgmm` and is
re-exported here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DegenerateInputError, DomainError

OMICS_KINDS = ("gene_expression", "mirna", "methylation", "other")

TRANSFORM_METHODS = ("box_cox", "yeo_johnson")

LAMBDA_RANGE = (-5.0, 5.0)
GOLDEN_TOL = 1e-4
GRID_POINTS = 101


@dataclass
class OmicsMatrix:
    """One omics dataset: samples in rows, features in columns.

    Missing cells are flagged in ``missing_mask`` and hold NaN in
    ``values``; every unmasked cell must be finite.
    """

    values: np.ndarray
    sample_ids: list[str]
    feature_ids: list[str]
    kind: str = "other"
    missing_mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {self.values.shape}")
        n, p = self.values.shape
        self.sample_ids = [str(s) for s in self.sample_ids]
        self.feature_ids = [str(f) for f in self.feature_ids]
        if len(self.sample_ids) != n:
            raise ValueError(f"{len(self.sample_ids)} sample ids for {n} rows")
        if len(self.feature_ids) != p:
            raise ValueError(f"{len(self.feature_ids)} feature ids for {p} columns")
        if len(set(self.sample_ids)) != n:
            raise ValueError("sample ids must be unique")
        if len(set(self.feature_ids)) != p:
            raise ValueError("feature ids must be unique")
        if self.kind not in OMICS_KINDS:
            raise ValueError(f"kind must be one of {OMICS_KINDS}, got {self.kind!r}")
        if self.missing_mask is None:
            self.missing_mask = np.isnan(self.values)
        else:
            self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
            if self.missing_mask.shape != self.values.shape:
                raise ValueError("missing_mask shape must match values")
        observed = ~self.missing_mask
        if not np.all(np.isfinite(self.values[observed])):
            raise ValueError("observed cells must be finite")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take_features(self, idx: np.ndarray) -> "OmicsMatrix":
        idx = np.asarray(idx, dtype=int)
        return OmicsMatrix(
            values=self.values[:, idx],
            sample_ids=list(self.sample_ids),
            feature_ids=[self.feature_ids[i] for i in idx],
            kind=self.kind,
            missing_mask=self.missing_mask[:, idx],
        )


@dataclass
class PowerTransformParams:
    """Fitted per-feature exponents for a monotone power transform."""

    method: str
    lambdas: np.ndarray
    feature_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.method not in TRANSFORM_METHODS:
            raise ValueError(f"method must be one of {TRANSFORM_METHODS}, got {self.method!r}")
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)


def default_neighbor_count(n: int) -> int:
    """round(sqrt(n)), the shared default for imputation and local scales."""
    return int(round(math.sqrt(n)))


# ---------------------------------------------------------------------------
# sparse-feature filter


def filter_sparse_features(
    x: OmicsMatrix, threshold: float = 0.20
) -> tuple[OmicsMatrix, np.ndarray]:
    """Drop features whose fraction of zero or missing cells exceeds
    ``threshold``.  Returns (filtered matrix, indices of removed features)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    n = x.n_samples
    bad = x.missing_mask | (~x.missing_mask & (x.values == 0.0))
    frac = bad.sum(axis=0) / n
    removed = np.flatnonzero(frac > threshold)
    kept = np.flatnonzero(frac <= threshold)
    if kept.size == 0:
        raise DegenerateInputError(
            f"{x.kind}: all {x.n_features} features exceed the {threshold:.0%} "
            "zero/missing threshold"
        )
    return x.take_features(kept), removed


# ---------------------------------------------------------------------------
# KNN imputation


def knn_impute(x: OmicsMatrix, k: int | None = None) -> tuple[OmicsMatrix, int]:
    """Fill missing cells with the mean over the k nearest samples (masked
    Euclidean distance, rescaled by sqrt(p / shared)) that observe the
    feature.  Returns (imputed matrix, number of imputed cells)."""
    n, p = x.values.shape
    if k is None:
        k = default_neighbor_count(n)
    if not 2 <= k <= n - 1:
        raise ValueError(f"k={k} outside [2, {n - 1}]")
    observed = ~x.missing_mask
    if not np.all(observed.any(axis=1)):
        empty = [x.sample_ids[i] for i in np.flatnonzero(~observed.any(axis=1))]
        raise DegenerateInputError(f"samples with no observed values: {empty}")
    never = np.flatnonzero(~observed.any(axis=0))
    if never.size:
        names = [x.feature_ids[i] for i in never]
        raise DegenerateInputError(f"features observed by no sample cannot be imputed: {names}")

    n_missing = int(x.missing_mask.sum())
    if n_missing == 0:
        out = OmicsMatrix(
            values=x.values.copy(),
            sample_ids=list(x.sample_ids),
            feature_ids=list(x.feature_ids),
            kind=x.kind,
            missing_mask=np.zeros_like(x.missing_mask),
        )
        return out, 0

    dists = backend.masked_pairwise_dists(np.where(observed, x.values, 0.0), observed)
    values = x.values.copy()
    for f in np.flatnonzero(x.missing_mask.any(axis=0)):
        observers = np.flatnonzero(observed[:, f])
        for i in np.flatnonzero(x.missing_mask[:, f]):
            cand = observers
            order = np.argsort(dists[i, cand], kind="stable")
            donors = cand[order[:k]]
            values[i, f] = x.values[donors, f].mean()
    out = OmicsMatrix(
        values=values,
        sample_ids=list(x.sample_ids),
        feature_ids=list(x.feature_ids),
        kind=x.kind,
        missing_mask=np.zeros_like(x.missing_mask),
    )
    return out, n_missing


# ---------------------------------------------------------------------------
# Z-score standardization


def zscore_standardize(x: OmicsMatrix) -> tuple[OmicsMatrix, list[str]]:
    """Center to mean 0 and scale to unit sample standard deviation (n-1
    divisor).  Constant features are dropped; their ids are returned."""
    if x.missing_mask.any():
        raise ValueError("zscore_standardize expects fully observed data; impute first")
    n = x.n_samples
    if n < 2:
        raise ValueError("need at least 2 samples to standardize")
    mean = x.values.mean(axis=0)
    std = x.values.std(axis=0, ddof=1)
    constant = std < 1e-12 * np.maximum(1.0, np.abs(mean))
    dropped = [x.feature_ids[i] for i in np.flatnonzero(constant)]
    kept = np.flatnonzero(~constant)
    if kept.size == 0:
        raise DegenerateInputError(f"{x.kind}: every feature is constant")
    vals = (x.values[:, kept] - mean[kept]) / std[kept]
    out = OmicsMatrix(
        values=vals,
        sample_ids=list(x.sample_ids),
        feature_ids=[x.feature_ids[i] for i in kept],
        kind=x.kind,
        missing_mask=np.zeros_like(vals, dtype=bool),
    )
    return out, dropped


# ---------------------------------------------------------------------------
# power transforms


def _box_cox(col: np.ndarray, lam: float) -> np.ndarray:
    if lam == 0.0:
        return np.log(col)
    return (np.power(col, lam) - 1.0) / lam


def _yeo_johnson(col: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(col)
    pos = col >= 0.0
    if lam == 0.0:
        out[pos] = np.log1p(col[pos])
    else:
        out[pos] = (np.power(col[pos] + 1.0, lam) - 1.0) / lam
    neg = ~pos
    if lam == 2.0:
        out[neg] = -np.log1p(-col[neg])
    else:
        out[neg] = -(np.power(-col[neg] + 1.0, 2.0 - lam) - 1.0) / (2.0 - lam)
    return out


def _profile_loglik(col: np.ndarray, lam: float, method: str, jac_term: float) -> float:
    y = _box_cox(col, lam) if method == "box_cox" else _yeo_johnson(col, lam)
    if not np.all(np.isfinite(y)):
        return -np.inf
    var = y.var()  # MLE variance (n divisor)
    n = col.shape[0]
    return -0.5 * n * np.log(max(var, 1e-300)) + (lam - 1.0) * jac_term


def _golden_max(fun, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _is_unimodal(vals: np.ndarray) -> bool:
    # non-strictly increasing to a peak, then non-strictly decreasing
    eps = 1e-12 * max(1.0, float(np.abs(vals[np.isfinite(vals)]).max(initial=1.0)))
    diffs = np.diff(vals)
    rising = True
    for d in diffs:
        if rising:
            if d < -eps:
                rising = False
        else:
            if d > eps:
                return False
    return True


def fit_power_transform(x: OmicsMatrix, method: str = "yeo_johnson") -> PowerTransformParams:
    """Per-feature exponent maximizing the Gaussian profile log-likelihood
    over [-5, 5] (golden-section search; 101-point grid fallback when the
    likelihood is not unimodal)."""
    if method not in TRANSFORM_METHODS:
        raise ValueError(f"method must be one of {TRANSFORM_METHODS}, got {method!r}")
    if x.missing_mask.any():
        raise ValueError("fit_power_transform expects fully observed data; impute first")
    lo, hi = LAMBDA_RANGE
    lambdas = np.empty(x.n_features)
    for j in range(x.n_features):
        col = x.values[:, j]
        if method == "box_cox":
            if np.any(col <= 0.0):
                raise DomainError(
                    f"box_cox requires strictly positive values; feature "
                    f"{x.feature_ids[j]!r} has minimum {col.min()}"
                )
            jac = float(np.log(col).sum())
        else:
            jac = float((np.sign(col) * np.log1p(np.abs(col))).sum())

        def ll(lam, _col=col, _jac=jac):
            return _profile_loglik(_col, lam, method, _jac)

        probe = np.array([ll(l) for l in np.linspace(lo, hi, 21)])
        if _is_unimodal(probe):
            lambdas[j] = _golden_max(ll, lo, hi, GOLDEN_TOL)
        else:
            grid = np.linspace(lo, hi, GRID_POINTS)
            lambdas[j] = grid[int(np.argmax([ll(l) for l in grid]))]
    return PowerTransformParams(method=method, lambdas=lambdas, feature_ids=list(x.feature_ids))


def apply_power_transform(x: OmicsMatrix, params: PowerTransformParams) -> OmicsMatrix:
    """Case-wise power transform of every feature; strictly monotone per
    feature."""
    if x.missing_mask.any():
        raise ValueError("apply_power_transform expects fully observed data")
    if params.lambdas.shape[0] != x.n_features:
        raise ValueError(
            f"params cover {params.lambdas.shape[0]} features, matrix has {x.n_features}"
        )
    if params.feature_ids and params.feature_ids != x.feature_ids:
        raise ValueError("params were fitted on different features")
    out = np.empty_like(x.values)
    for j in range(x.n_features):
        col = x.values[:, j]
        lam = float(params.lambdas[j])
        if params.method == "box_cox":
            if np.any(col <= 0.0):
                raise DomainError(
                    f"box_cox requires strictly positive values; feature "
                    f"{x.feature_ids[j]!r} has minimum {col.min()}"
                )
            out[:, j] = _box_cox(col, lam)
        else:
            out[:, j] = _yeo_johnson(col, lam)
    if not np.all(np.isfinite(out)):
        raise DomainError("power transform produced non-finite values")
    return OmicsMatrix(
        values=out,
        sample_ids=list(x.sample_ids),
        feature_ids=list(x.feature_ids),
        kind=x.kind,
        missing_mask=np.zeros_like(out, dtype=bool),
    )


# re-exported so the preprocessing surface lives in one module
from .bgmm import GmmModel, fit_bayesian_gmm, select_features_bgmm  # noqa: E402,F401
