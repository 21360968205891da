"""k-means++ clustering and partition agreement metrics.

ARI comes from the four pair-concordance counts
(2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d))); NMI is mutual information
normalized by the larger of the two partition entropies, natural log,
with 0 log 0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass
class Partition:
    """Cluster labels 0..k-1 with every cluster nonempty."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ValueError("labels must be a non-empty vector")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        present = np.unique(self.labels)
        if present[0] < 0 or present[-1] >= self.k:
            raise ValueError(f"labels must lie in [0, {self.k})")
        if present.size != self.k:
            raise ValueError("every cluster must be nonempty")

    @classmethod
    def from_labels(cls, raw) -> "Partition":
        """Build from arbitrary hashable labels, renumbered by sorted order."""
        raw = np.asarray(raw)
        uniq, codes = np.unique(raw, return_inverse=True)
        return cls(labels=codes.astype(np.int64), k=int(uniq.size))

    @property
    def n(self) -> int:
        return int(self.labels.size)


def _dsq_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-squared-weighted seeding of k initial centroids."""
    n = points.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((points - points[idx[0]]) ** 2).sum(axis=1)
    while len(idx) < k:
        total = d2.sum()
        if total > 0.0:
            probs = d2 / total
            nxt = int(rng.choice(n, p=probs))
        else:  # all remaining points coincide with chosen centroids
            nxt = int(rng.integers(n))
        idx.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[np.asarray(idx)]


def kmeans_pp(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> Partition:
    """k-means++ with Lloyd refinement; best of ``restarts`` runs by
    within-cluster sum of squares, deterministic given the seed."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.size == 0:
        raise ValueError(f"points must be a non-empty 2-D array, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    rng = np.random.default_rng(seed)
    best_labels = None
    best_wcss = np.inf
    for _ in range(restarts):
        cent0 = _dsq_seed(points, k, rng)
        labels, _, wcss = backend.lloyd(points, cent0, max_iter, tol)
        if wcss < best_wcss:
            best_wcss = wcss
            best_labels = labels
    return Partition(labels=best_labels, k=k)


def _contingency(a: Partition, b: Partition) -> np.ndarray:
    if a.n != b.n:
        raise ValueError(f"partitions cover {a.n} vs {b.n} samples")
    table = np.zeros((a.k, b.k), dtype=np.int64)
    np.add.at(table, (a.labels, b.labels), 1)
    return table


def _pairs(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float((x * (x - 1.0) / 2.0).sum())


def ari(a: Partition, b: Partition) -> float:
    """Adjusted agreement of two partitions from pair-concordance counts;
    1 for identical partitions (up to renaming), 0 at chance level."""
    table = _contingency(a, b)
    n = a.n
    same_both = _pairs(table)
    same_a = _pairs(table.sum(axis=1))
    same_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    pa = same_both
    pb = same_a - same_both
    pc = same_b - same_both
    pd = total - same_a - same_b + same_both
    if pb == 0.0 and pc == 0.0:
        return 1.0
    num = 2.0 * (pa * pd - pb * pc)
    den = (pa + pb) * (pb + pd) + (pa + pc) * (pc + pd)
    if den == 0.0:
        return 0.0
    return num / den


def nmi(a: Partition, b: Partition) -> float:
    """Mutual information over max entropy, natural log, 0 log 0 = 0."""
    table = _contingency(a, b).astype(np.float64)
    n = float(a.n)
    if a.k == 1 and b.k == 1:
        return 1.0
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    mi = 0.0
    nz = table > 0
    idx_i, idx_j = np.nonzero(nz)
    for i, j in zip(idx_i, idx_j):
        nij = table[i, j]
        mi += (nij / n) * np.log(n * nij / (rows[i] * cols[j]))
    def entropy(counts):
        frac = counts[counts > 0] / n
        return float(-(frac * np.log(frac)).sum())
    norm = max(entropy(rows), entropy(cols))
    if norm == 0.0:
        return 0.0
    return mi / norm


@dataclass
class SweepRow:
    k2: int
    ari: float = np.nan
    nmi: float = np.nan
    error: str | None = None


def sweep_k2_metrics(
    candidates,
    true_labels: Partition,
    k: int | None = None,
    seed: int = 0,
    restarts: int = 10,
) -> list[SweepRow]:
    """Cluster every stage-3 candidate's fused network and score it against
    the reference labels; one row per candidate, errors recorded in place."""
    if k is None:
        k = true_labels.k
    rows: list[SweepRow] = []
    for cand in candidates:
        if getattr(cand, "error", None) is not None or getattr(cand, "s", None) is None:
            rows.append(SweepRow(k2=cand.k2, error=cand.error or "no fused network"))
            continue
        try:
            part = kmeans_pp(cand.s, k, seed=seed, restarts=restarts)
            rows.append(SweepRow(k2=cand.k2, ari=ari(part, true_labels), nmi=nmi(part, true_labels)))
        except (ValueError, ArithmeticError) as exc:
            rows.append(SweepRow(k2=cand.k2, error=f"k2={cand.k2}: {exc}"))
    return rows
