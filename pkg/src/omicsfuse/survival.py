"""Multi-group log-rank test for separation of survival curves.

The statistic compares observed event counts per group against their
hypergeometric expectation at every distinct event time; the quadratic
form over the first k-1 groups is chi-square with k-1 degrees of
freedom under the null.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .numkernel import chi_square_sf

SIGNIFICANCE_NEG_LOG10_P = 1.30


@dataclass(frozen=True)
class SurvivalRecord:
    sample_id: str
    time: float
    event: int  # 1 observed, 0 censored

    def __post_init__(self):
        if not np.isfinite(self.time) or self.time <= 0:
            raise ValueError(f"time must be finite and > 0, got {self.time}")
        if self.event not in (0, 1):
            raise ValueError(f"event must be 0 or 1, got {self.event}")


@dataclass
class SurvivalReport:
    chi2: float
    df: int
    p_value: float
    neg_log10_p: float
    significant: bool
    group_sizes: tuple[int, ...]
    observed_events: tuple[int, ...]
    expected_events: tuple[float, ...]


def logrank_test(labels, records: list[SurvivalRecord]) -> SurvivalReport:
    """Log-rank test of the survival curves implied by ``labels``.

    labels[i] assigns records[i] to a group; groups are the distinct
    label values. Accepts a Partition or any label vector. Raises
    ValueError with fewer than two groups and DegenerateInputError when
    no events were observed at all.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    if labels.ndim != 1 or labels.size != len(records):
        raise ValueError(
            f"labels length {labels.shape} does not match {len(records)} records"
        )
    times = np.array([r.time for r in records], dtype=np.float64)
    events = np.array([r.event for r in records], dtype=np.int64)
    uniq, codes = np.unique(labels, return_inverse=True)
    k = int(uniq.size)
    if k < 2:
        raise ValueError(f"log-rank needs at least two groups, got {k}")
    if events.sum() == 0:
        raise DegenerateInputError("no observed events in any group")

    group_sizes = np.bincount(codes, minlength=k)
    observed = np.zeros(k, dtype=np.float64)
    expected = np.zeros(k, dtype=np.float64)
    # U and V over the first k-1 groups; the k-th row is linearly dependent
    u = np.zeros(k - 1, dtype=np.float64)
    v = np.zeros((k - 1, k - 1), dtype=np.float64)

    event_times = np.unique(times[events == 1])
    for t in event_times:
        at_risk = times >= t
        n_t = float(at_risk.sum())
        if n_t <= 0.0:
            continue
        dying = at_risk & (events == 1) & (times == t)
        d_t = float(dying.sum())
        n_g = np.bincount(codes[at_risk], minlength=k).astype(np.float64)
        d_g = np.bincount(codes[dying], minlength=k).astype(np.float64)
        e_g = d_t * n_g / n_t
        observed += d_g
        expected += e_g
        u += (d_g - e_g)[: k - 1]
        # variance of the hypergeometric draw, finite-population corrected
        f_t = d_t * (n_t - d_t) / max(n_t - 1.0, 1.0)
        p = n_g[: k - 1] / n_t
        v += f_t * (np.diag(p) - np.outer(p, p))

    try:
        sol = np.linalg.solve(v, u)
    except np.linalg.LinAlgError:
        sol = np.linalg.pinv(v) @ u
    chi2 = float(u @ sol)
    if not np.isfinite(chi2):
        sol = np.linalg.pinv(v) @ u
        chi2 = float(u @ sol)
    chi2 = max(chi2, 0.0)
    df = k - 1
    p_value = chi_square_sf(chi2, df)
    neg_log10_p = float(-np.log10(max(p_value, 1e-300)))
    return SurvivalReport(
        chi2=chi2,
        df=df,
        p_value=p_value,
        neg_log10_p=neg_log10_p,
        significant=neg_log10_p >= SIGNIFICANCE_NEG_LOG10_P,
        group_sizes=tuple(int(s) for s in group_sizes),
        observed_events=tuple(int(o) for o in observed),
        expected_events=tuple(float(e) for e in expected),
    )
