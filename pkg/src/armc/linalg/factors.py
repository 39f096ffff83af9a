"""
ARMC - LowRankFactors Helpers

Entry evaluation, densification, and Frobenius norms of differences
computed on a 2r x 2r core instead of n x n arrays.
"""

from __future__ import annotations

import numpy as np

from armc.config import LinalgSettings
from armc.errors import DimensionMismatchError, RankCollapseError
from armc.linalg.dense import _sign_normalize, qr_thin
from armc.types import LowRankFactors

_DEFAULTS = LinalgSettings()


def make_factors(
    u: np.ndarray,
    sigma: np.ndarray,
    v: np.ndarray,
    collapse_tol: float = _DEFAULTS.collapse_tol,
) -> LowRankFactors:
    """
    Build sign-normalized factors after a truncation.

    Raises:
        RankCollapseError: if sigma_r <= collapse_tol * sigma_1.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    check_collapse(sigma, collapse_tol)
    u, v = _sign_normalize(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))
    return LowRankFactors(u=u, sigma=sigma, v=v)


def check_collapse(sigma: np.ndarray, collapse_tol: float = _DEFAULTS.collapse_tol) -> None:
    """Raise RankCollapseError when the trailing singular value has degenerated."""
    if sigma.size == 0:
        raise RankCollapseError("empty spectrum")
    top = float(sigma[0])
    last = float(sigma[-1])
    if not np.isfinite(top) or top <= 0.0 or last <= collapse_tol * top:
        raise RankCollapseError(
            f"rank collapse: sigma_r={last:.3e} <= {collapse_tol:.0e} * sigma_1={top:.3e}"
        )


def validate_factors(f: LowRankFactors, tol: float = 1e-10) -> None:
    """Check orthonormal columns and a positive non-increasing spectrum."""
    eye = np.eye(f.r)
    if np.abs(f.u.T @ f.u - eye).max(initial=0.0) > tol:
        raise DimensionMismatchError("u does not have orthonormal columns")
    if np.abs(f.v.T @ f.v - eye).max(initial=0.0) > tol:
        raise DimensionMismatchError("v does not have orthonormal columns")
    if np.any(f.sigma <= 0) or np.any(np.diff(f.sigma) > 0):
        raise DimensionMismatchError("sigma must be positive and non-increasing")


def densify(f: LowRankFactors) -> np.ndarray:
    """The n x n matrix u @ diag(sigma) @ v.T."""
    return (f.u * f.sigma) @ f.v.T


def factor_entries(
    f: LowRankFactors,
    rows: np.ndarray,
    cols: np.ndarray,
    chunk: int = _DEFAULTS.kernel_chunk,
) -> np.ndarray:
    """Entries sum_k u[i,k] sigma[k] v[j,k] at the given index pairs, O(len * r)."""
    out = np.empty(len(rows), dtype=np.float64)
    us = f.u * f.sigma
    for start in range(0, len(rows), chunk):
        stop = start + chunk
        out[start:stop] = np.einsum(
            "ij,ij->i", us[rows[start:stop]], f.v[cols[start:stop]]
        )
    return out


def max_abs_entry(f: LowRankFactors, chunk_rows: int = 1024) -> float:
    """Exact ||L||_inf, computed in row blocks."""
    us = f.u * f.sigma
    best = 0.0
    for start in range(0, f.n, chunk_rows):
        block = us[start : start + chunk_rows] @ f.v.T
        best = max(best, float(np.abs(block).max(initial=0.0)))
    return best


def fro_norm(f: LowRankFactors) -> float:
    return float(np.linalg.norm(f.sigma))


def fro_distance(a: LowRankFactors, b: LowRankFactors) -> float:
    """
    ||A - B||_F without forming either matrix.

    [Ua, Ub] = Qu Ru and [Va, Vb] = Qv Rv give
    A - B = Qu (Ru diag(sa, -sb) Rv^T) Qv^T, so the norm is that of a
    (ra + rb)-square core.
    """
    if a.n != b.n:
        raise DimensionMismatchError(f"dimension mismatch: {a.n} vs {b.n}")
    width = a.r + b.r
    if width > a.n:
        return float(np.linalg.norm(densify(a) - densify(b)))
    ru = qr_thin(np.hstack([a.u, b.u])).rfac
    rv = qr_thin(np.hstack([a.v, b.v])).rfac
    weights = np.concatenate([a.sigma, -b.sigma])
    core = (ru * weights) @ rv.T
    return float(np.linalg.norm(core))
