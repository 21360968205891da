"""Independent brute-force oracles used by the test suite.

These deliberately avoid the code paths used by the package: eigenvalues
come from characteristic-polynomial bisection, tail probabilities from
adaptive quadrature of the density, partition metrics from O(n^2) pair
enumeration, and survival p-values from label permutations.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, special


# -- characteristic-polynomial eigenvalue oracle ----------------------------


def charpoly_coeffs(a: np.ndarray) -> np.ndarray:
    """Faddeev-LeVerrier coefficients of det(lambda I - A).

    Returns c with p(lambda) = sum_i c[i] * lambda**(n - i), c[0] = 1.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def _poly_eval(coeffs: np.ndarray, x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def eig_by_charpoly(a: np.ndarray, grid: int = 200001) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by sign-change bisection on the
    characteristic polynomial.  Ascending.  Assumes distinct roots."""
    a = np.asarray(a, dtype=np.float64)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    coeffs = charpoly_coeffs(a)
    radius = np.abs(a).sum(axis=1).max() + 1.0  # Gershgorin bound
    xs = np.linspace(-radius, radius, grid)
    vals = np.array([_poly_eval(coeffs, x) for x in xs])
    roots = []
    for i in range(grid - 1):
        lo, hi = xs[i], xs[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi < 0.0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fmid = _poly_eval(coeffs, mid)
                if fmid == 0.0:
                    lo = hi = mid
                    break
                if flo * fmid < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            roots.append(0.5 * (lo + hi))
    if abs(_poly_eval(coeffs, xs[-1])) < 1e-300:
        roots.append(xs[-1])
    assert len(roots) == n, f"found {len(roots)} roots, expected {n}"
    return np.sort(np.asarray(roots))


# -- chi-square survival function by quadrature -----------------------------


def chi2_sf_quad(x: float, df: int) -> float:
    norm = 2.0 ** (df / 2.0) * special.gamma(df / 2.0)

    def density(t):
        return t ** (df / 2.0 - 1.0) * np.exp(-t / 2.0) / norm

    val, _ = integrate.quad(density, x, np.inf, limit=200)
    return float(val)


def chi2_cdf_quad(x: float, df: int) -> float:
    norm = 2.0 ** (df / 2.0) * special.gamma(df / 2.0)

    def density(t):
        return t ** (df / 2.0 - 1.0) * np.exp(-t / 2.0) / norm

    val, _ = integrate.quad(density, 0.0, x, limit=200)
    return float(val)


# -- simplex projection by grid search ---------------------------------------


def simplex_project_grid(v: np.ndarray, steps: int = 2000) -> np.ndarray:
    """2-D simplex projection by dense search over (t, 1 - t)."""
    v = np.asarray(v, dtype=np.float64)
    assert v.shape == (2,)
    ts = np.linspace(0.0, 1.0, steps + 1)
    cand = np.stack([ts, 1.0 - ts], axis=1)
    errs = ((cand - v[None, :]) ** 2).sum(axis=1)
    return cand[np.argmin(errs)]


# -- partition metrics by pair enumeration -----------------------------------


def pair_counts(labels_a: np.ndarray, labels_b: np.ndarray):
    """(a, b, c, d): same/same, same-in-A-only, same-in-B-only, different."""
    la = np.asarray(labels_a)
    lb = np.asarray(labels_b)
    n = la.shape[0]
    a = b = c = d = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa = la[i] == la[j]
            sb = lb[i] == lb[j]
            if sa and sb:
                a += 1
            elif sa:
                b += 1
            elif sb:
                c += 1
            else:
                d += 1
    return a, b, c, d


def ari_brute(labels_a, labels_b) -> float:
    a, b, c, d = pair_counts(labels_a, labels_b)
    if b == 0 and c == 0:
        return 1.0
    num = 2.0 * (a * d - b * c)
    den = (a + b) * (b + d) + (a + c) * (c + d)
    if den == 0:
        return 0.0
    return num / den


def nmi_brute(labels_a, labels_b) -> float:
    la = np.asarray(labels_a)
    lb = np.asarray(labels_b)
    n = la.shape[0]
    cls_a = np.unique(la)
    cls_b = np.unique(lb)
    if len(cls_a) == 1 and len(cls_b) == 1:
        return 1.0
    mi = 0.0
    for ca in cls_a:
        for cb in cls_b:
            inter = np.sum((la == ca) & (lb == cb))
            if inter == 0:
                continue
            na = np.sum(la == ca)
            nb = np.sum(lb == cb)
            mi += (inter / n) * np.log(n * inter / (na * nb))
    ha = 0.0
    for ca in cls_a:
        frac = np.sum(la == ca) / n
        ha -= frac * np.log(frac)
    hb = 0.0
    for cb in cls_b:
        frac = np.sum(lb == cb) / n
        hb -= frac * np.log(frac)
    norm = max(ha, hb)
    if norm == 0.0:
        return 0.0
    return mi / norm


# -- log-rank statistic and permutation p-value ------------------------------


def logrank_chi2_oracle(times, events, labels) -> float:
    """Straightforward per-event-time tabulation of the k-group log-rank
    statistic, written independently of the package implementation."""
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=bool)
    labels = np.asarray(labels)
    groups = np.unique(labels)
    k = len(groups)
    event_times = np.unique(times[events])
    u = np.zeros(k)
    v = np.zeros((k, k))
    for t in event_times:
        at_risk = times >= t
        n_t = at_risk.sum()
        d_t = np.sum(events & (times == t))
        if n_t == 0 or d_t == 0:
            continue
        n_g = np.array([np.sum(at_risk & (labels == g)) for g in groups], dtype=np.float64)
        d_g = np.array(
            [np.sum(events & (times == t) & (labels == g)) for g in groups], dtype=np.float64
        )
        frac = n_g / n_t
        u += d_g - d_t * frac
        if n_t > 1:
            scale = d_t * (n_t - d_t) / (n_t - 1.0)
            v += scale * (np.diag(frac) - np.outer(frac, frac))
    u = u[: k - 1]
    v = v[: k - 1, : k - 1]
    try:
        sol = np.linalg.solve(v, u)
    except np.linalg.LinAlgError:
        sol = np.linalg.pinv(v) @ u
    return float(max(u @ sol, 0.0))


def logrank_permutation_p(times, events, labels, n_perm: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    observed = logrank_chi2_oracle(times, events, labels)
    labels = np.asarray(labels)
    hits = 0
    for _ in range(n_perm):
        perm = rng.permutation(labels)
        if logrank_chi2_oracle(times, events, perm) >= observed:
            hits += 1
    return hits / n_perm


def logrank_chi2_two_group_batch(times, events, label_matrix) -> np.ndarray:
    """Two-group log-rank chi-square for a batch of 0/1 labelings at once.

    Requires all observation times distinct (no tie handling); with every
    event sorted to position i the risk set is simply the n - i latest
    positions, so per-batch suffix sums of the group indicator give the
    at-risk group counts in one vectorized pass."""
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=bool)
    if np.unique(times).size != times.size:
        raise ValueError("batch oracle requires all-distinct times")
    order = np.argsort(times)
    e_s = events[order]
    ev_pos = np.nonzero(e_s)[0]
    g = np.asarray(label_matrix, dtype=np.float64)[:, order]
    if not np.isin(g, (0.0, 1.0)).all():
        raise ValueError("batch oracle supports exactly two groups labeled 0/1")
    suffix = np.cumsum(g[:, ::-1], axis=1)[:, ::-1]
    n = times.size
    n_t = (n - ev_pos).astype(np.float64)
    n1 = suffix[:, ev_pos]
    d1 = g[:, ev_pos]
    u = (d1 - n1 / n_t).sum(axis=1)
    # d_t = 1 at every event, so the variance weight d(n-d)/(n-1) cancels
    v = (n1 * (n_t - n1) / (n_t * n_t)).sum(axis=1)
    out = np.zeros(g.shape[0])
    np.divide(u * u, v, out=out, where=v > 0)
    return out


def logrank_permutation_p_fast(times, events, labels, n_perm: int, seed: int) -> float:
    """Same estimator as logrank_permutation_p, vectorized for two groups."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels, dtype=np.int64)
    observed = logrank_chi2_two_group_batch(times, events, labels[None, :])[0]
    perms = rng.permuted(np.tile(labels, (n_perm, 1)), axis=1)
    chi2 = logrank_chi2_two_group_batch(times, events, perms)
    return float(np.mean(chi2 >= observed))
