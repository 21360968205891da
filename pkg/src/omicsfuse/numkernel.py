"""Shared numeric primitives: thin SVD, symmetric eigenpairs, simplex
projection, and the chi-square survival function.

Thin wrappers with a stable error taxonomy so callers never touch
numpy.linalg exceptions directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import backend
from .errors import NumericalFailure

__all__ = [
    "SvdFactors",
    "svd_thin",
    "sym_eig",
    "project_row_simplex",
    "project_rows_simplex",
    "chi_square_sf",
]


@dataclass
class SvdFactors:
    """Thin SVD factors: a = u @ diag(singular_values) @ vt."""

    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


def svd_thin(a: np.ndarray) -> SvdFactors:
    """Thin SVD with r = min(m, n) components, singular values descending."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"svd_thin expects a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd_thin expects finite entries")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"SVD did not converge for a {a.shape[0]}x{a.shape[1]} matrix"
        ) from exc
    return SvdFactors(u=u, singular_values=s, vt=vt)


def sym_eig(a: np.ndarray, c: int, which: str = "smallest") -> tuple[np.ndarray, np.ndarray]:
    """c eigenpairs of the symmetrized (a + a.T)/2.

    Returns (values, vectors) with vectors in columns; values ascending for
    ``which="smallest"``, descending for ``which="largest"``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig expects a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"sym_eig: c={c} outside [1, {n}]")
    if which not in ("smallest", "largest"):
        raise ValueError(f"sym_eig: which must be 'smallest' or 'largest', got {which!r}")
    sym = 0.5 * (a + a.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed for a {n}x{n} matrix") from exc
    if which == "smallest":
        return vals[:c], vecs[:, :c]
    order = np.arange(n - 1, n - 1 - c, -1)
    return vals[order], vecs[:, order]


def project_row_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"project_row_simplex expects a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("project_row_simplex expects finite entries")
    return backend.project_rows(v[None, :])[0]


def project_rows_simplex(m: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection of a matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"project_rows_simplex expects a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("project_rows_simplex expects finite entries")
    return backend.project_rows(m)


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability P[X >= x] for a chi-square variable with df
    degrees of freedom, via the regularized upper incomplete gamma
    Q(df/2, x/2)."""
    df = int(df)
    if df < 1:
        raise ValueError(f"chi_square_sf: df must be a positive integer, got {df}")
    x = float(x)
    if not np.isfinite(x) or x < 0.0:
        raise ValueError(f"chi_square_sf: x must be finite and >= 0, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))
