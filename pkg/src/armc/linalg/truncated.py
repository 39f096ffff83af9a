"""
ARMC - Truncated SVD of Implicit Operators

Best rank-r approximation of an n x n matrix known only through its
action x -> A x and its adjoint x -> A^T x. The operator is wrapped in a
scipy LinearOperator and handed to ARPACK (svds) from a seeded Gaussian
start vector, so results are reproducible and converge to machine
precision regardless of the spectral gap.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, svds

from armc.config import LinalgSettings
from armc.errors import ConfigError, RankCollapseError
from armc.linalg.factors import make_factors
from armc.types import LowRankFactors

logger = logging.getLogger(__name__)

_DEFAULTS = LinalgSettings()

BlockOperator = Callable[[np.ndarray], np.ndarray]


def as_linear_operator(apply: BlockOperator, apply_adjoint: BlockOperator, n: int) -> LinearOperator:
    """View a pair of block callbacks as an n x n LinearOperator."""
    return LinearOperator(
        (n, n),
        matvec=lambda x: apply(np.reshape(x, (n, 1)))[:, 0],
        rmatvec=lambda x: apply_adjoint(np.reshape(x, (n, 1)))[:, 0],
        matmat=apply,
        rmatmat=apply_adjoint,
        dtype=np.float64,
    )


def truncated_svd_operator(
    apply: BlockOperator,
    apply_adjoint: BlockOperator,
    n: int,
    r: int,
    oversample: int = _DEFAULTS.oversample,
    seed: int | Sequence[int] = 0,
    tol: float = _DEFAULTS.svd_tol,
    collapse_tol: float = _DEFAULTS.collapse_tol,
) -> LowRankFactors:
    """
    Rank-r truncated SVD of an implicit n x n operator.

    The Lanczos basis holds max(2r + 1, r + oversample) vectors, clipped
    to n. When r >= n - 1 the operator is materialized and decomposed
    densely.

    Args:
        apply: maps an n x k block X to A @ X.
        apply_adjoint: maps an n x k block X to A.T @ X.
        n: dimension.
        r: target rank.
        oversample: extra Lanczos vectors beyond r.
        seed: seed of the start vector (an int or a sequence of ints).
        tol: relative accuracy of the singular values; 0 means machine precision.

    Returns:
        LowRankFactors with r columns, sigma non-increasing.

    Raises:
        ConfigError: r outside [1, n].
        RankCollapseError: computed sigma_r <= collapse_tol * sigma_1, or
            ARPACK did not converge.
    """
    if not 1 <= r <= n:
        raise ConfigError(f"target rank r={r} must lie in [1, n={n}]")

    if r >= n - 1:
        u, s, vt = np.linalg.svd(apply(np.eye(n)), full_matrices=False)
        return make_factors(u[:, :r], s[:r], vt[:r].T, collapse_tol)

    ncv = min(n, max(2 * r + 1, r + max(oversample, 0)))
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        u, s, vt = svds(
            as_linear_operator(apply, apply_adjoint, n), k=r, ncv=ncv, tol=tol, v0=v0
        )
    except ArpackNoConvergence as exc:
        raise RankCollapseError(f"truncated SVD did not converge for r={r}: {exc}") from exc

    order = np.argsort(s)[::-1]
    logger.debug(f"truncated svd n={n} r={r} ncv={ncv}: sigma_1={s[order[0]]:.3e} sigma_r={s[order[-1]]:.3e}")
    return make_factors(u[:, order], s[order], vt[order].T, collapse_tol)
