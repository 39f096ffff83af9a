"""
ARMC - P_Omega Kernels

Entry evaluation of low-rank factors on the support, sparse residuals,
and products of the support-sparse matrix with dense blocks. A CSR view
over the sorted triplets is assembled per call from the cached row
pointer, so no index copy is made.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from armc.errors import DimensionMismatchError
from armc.linalg.factors import factor_entries
from armc.types import LowRankFactors, ObservationSet, SparseValues


def eval_on_support(l: LowRankFactors, obs: ObservationSet) -> SparseValues:
    """Values of u @ diag(sigma) @ v.T at every observed position."""
    if l.n != obs.n:
        raise DimensionMismatchError(f"factors are {l.n}x{l.n}, observations are {obs.n}x{obs.n}")
    return SparseValues(factor_entries(l, obs.rows, obs.cols))


def residual(
    obs: ObservationSet,
    l: LowRankFactors,
    s: SparseValues | None = None,
) -> SparseValues:
    """P_Omega(M - L - S); S is taken as zero when absent."""
    fitted = eval_on_support(l, obs).vals
    out = obs.vals - fitted
    if s is not None:
        _check_aligned(obs, s)
        out = out - s.vals
    return SparseValues(out)


def support_matrix(obs: ObservationSet, vals: SparseValues) -> sp.csr_matrix:
    """CSR view of the n x n matrix with vals on the support."""
    _check_aligned(obs, vals)
    return sp.csr_matrix((vals.vals, obs.cols, obs.row_ptr), shape=(obs.n, obs.n))


def sparse_times_dense(
    obs: ObservationSet,
    vals: SparseValues,
    x: np.ndarray,
    transpose: bool = False,
) -> np.ndarray:
    """
    G @ x, or G.T @ x when transpose is set, for G the support matrix of vals.

    Cost O(|Omega| k) for an n x k block x.
    """
    if x.shape[0] != obs.n:
        raise DimensionMismatchError(f"block has {x.shape[0]} rows, expected {obs.n}")
    g = support_matrix(obs, vals)
    out = g.T @ x if transpose else g @ x
    return np.asarray(out)


def _check_aligned(obs: ObservationSet, vals: SparseValues) -> None:
    if vals.count != obs.count:
        raise DimensionMismatchError(
            f"sparse values have {vals.count} entries, observation set has {obs.count}"
        )
