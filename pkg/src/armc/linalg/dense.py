"""
ARMC - Small Dense Decompositions

qr_thin: Householder thin QR with a non-negative R diagonal.
svd_small: one-sided (Hestenes) Jacobi SVD for the small cores that
appear inside the structured truncation.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from armc.config import LinalgSettings
from armc.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

_DEFAULTS = LinalgSettings()


class ThinQR(NamedTuple):
    q: np.ndarray  # n x k, orthonormal columns
    rfac: np.ndarray  # k x k, upper triangular, diagonal >= 0
    deficient: np.ndarray  # k bools, True where the column was dependent


class SmallSVD(NamedTuple):
    p: np.ndarray  # m x m orthonormal
    s: np.ndarray  # m, non-increasing, >= 0
    q: np.ndarray  # m x m orthonormal
    converged: bool
    sweeps: int


def qr_thin(a: np.ndarray, deficiency_tol: float = _DEFAULTS.qr_deficiency_tol) -> ThinQR:
    """
    Thin QR factorization a = q @ rfac with diag(rfac) >= 0.

    A column that is (numerically) dependent on the previous ones gets a
    zero diagonal entry in rfac; its q column is the orthogonal completion
    direction produced by the Householder reflections.

    Args:
        a: n x k matrix with k <= n.
        deficiency_tol: relative size below which |rfac[j, j]| counts as zero.

    Returns:
        ThinQR(q, rfac, deficient).
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"qr_thin expects a 2-D array, got shape {a.shape}")
    n, k = a.shape
    if k > n:
        raise DimensionMismatchError(f"qr_thin needs k <= n, got {a.shape}")

    q, rfac = np.linalg.qr(a, mode="reduced")
    signs = np.where(np.diag(rfac) < 0, -1.0, 1.0)
    q = q * signs
    rfac = rfac * signs[:, None]

    diag = np.diag(rfac).copy()
    scale = float(diag.max()) if k else 0.0
    deficient = diag <= deficiency_tol * scale if scale > 0 else np.ones(k, dtype=bool)
    if deficient.any():
        idx = np.flatnonzero(deficient)
        rfac[idx, idx] = 0.0
        logger.debug(f"qr_thin: {len(idx)} dependent column(s) at {idx.tolist()}")
    return ThinQR(q, rfac, deficient)


@lru_cache(maxsize=64)
def _round_robin(m: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Disjoint column pairs per round; every pair appears once per sweep."""
    players = list(range(m + (m % 2)))  # index m is a bye when m is odd
    count = len(players)
    rounds = []
    for _ in range(count - 1):
        pairs = [
            (min(players[i], players[count - 1 - i]), max(players[i], players[count - 1 - i]))
            for i in range(count // 2)
        ]
        pairs = [pr for pr in pairs if pr[1] < m]
        if pairs:
            left = np.array([pr[0] for pr in pairs], dtype=np.int64)
            right = np.array([pr[1] for pr in pairs], dtype=np.int64)
            rounds.append((left, right))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def svd_small(k: np.ndarray, max_sweeps: int = _DEFAULTS.jacobi_max_sweeps) -> SmallSVD:
    """
    SVD k = p @ diag(s) @ q.T of a small square matrix by one-sided Jacobi.

    Columns of a working copy are rotated pairwise until mutually
    orthogonal; disjoint pairs of one round are rotated together. The
    singular values are the final column norms. Singular vector pairs are
    sign-normalized so the largest-magnitude entry of each left vector is
    positive.

    Args:
        k: m x m matrix.
        max_sweeps: sweep cap; hitting it sets converged=False.

    Returns:
        SmallSVD(p, s, q, converged, sweeps).
    """
    a = np.array(k, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"svd_small expects a square matrix, got {a.shape}")
    m = a.shape[0]
    if m == 0:
        empty = np.zeros((0, 0))
        return SmallSVD(empty, np.zeros(0), empty, True, 0)

    q = np.eye(m)
    tol = np.finfo(np.float64).eps * m
    converged = m == 1
    sweeps = 0
    rounds = _round_robin(m)

    while not converged and sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for left, right in rounds:
            ai = a[:, left]
            aj = a[:, right]
            alpha = np.einsum("ij,ij->j", ai, ai)
            beta = np.einsum("ij,ij->j", aj, aj)
            gamma = np.einsum("ij,ij->j", ai, aj)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            safe_gamma = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * safe_gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)

            a[:, left] = c * ai - s * aj
            a[:, right] = s * ai + c * aj
            qi = q[:, left]
            qj = q[:, right]
            q[:, left] = c * qi - s * qj
            q[:, right] = s * qi + c * qj
        converged = not rotated

    if not converged:
        logger.warning(f"svd_small: {m}x{m} core not converged after {sweeps} sweeps")

    s_vals = np.linalg.norm(a, axis=0)
    order = np.argsort(-s_vals, kind="stable")
    s_vals = s_vals[order]
    a = a[:, order]
    q = q[:, order]

    p = np.zeros((m, m))
    cutoff = s_vals[0] * m * np.finfo(np.float64).eps if s_vals[0] > 0 else 0.0
    nonzero = s_vals > cutoff
    p[:, nonzero] = a[:, nonzero] / s_vals[nonzero]
    if not nonzero.all():
        p = _complete_basis(p, int(nonzero.sum()))

    p, q = _sign_normalize(p, q)
    return SmallSVD(p, s_vals, q, converged, sweeps)


def _complete_basis(p: np.ndarray, filled: int) -> np.ndarray:
    """Fill columns filled.. of p with an orthonormal completion of the first ones."""
    m = p.shape[0]
    stacked = np.hstack([p[:, :filled], np.eye(m)])
    basis, _ = np.linalg.qr(stacked, mode="reduced")
    out = p.copy()
    out[:, filled:] = basis[:, filled:m]
    return out


def _sign_normalize(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip pairs so the largest-magnitude entry of each left vector is positive."""
    if left.size == 0:
        return left, right
    pivots = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[pivots, np.arange(left.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs
