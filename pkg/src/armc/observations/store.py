"""
ARMC - ObservationSet Construction

Canonical storage is COO sorted lexicographically by (row, col) with
no duplicates; every constructor goes through build_observations.
"""

from __future__ import annotations

import logging

import numpy as np

from armc.errors import DataFormatError, DimensionMismatchError, EmptyObservationError
from armc.types import ObservationSet

logger = logging.getLogger(__name__)


def build_observations(
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    n: int,
    p: float | None = None,
) -> ObservationSet:
    """
    Sort and validate triplets into an ObservationSet.

    Args:
        rows, cols: 0-based indices.
        vals: observed values.
        n: matrix dimension.
        p: sampling rate; None uses the empirical ratio |Omega| / n^2.

    Raises:
        DimensionMismatchError: unequal lengths or indices outside [0, n).
        DataFormatError: duplicate (row, col) pairs.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
        raise DimensionMismatchError("rows, cols and vals must be 1-D arrays of equal length")
    if n < 1:
        raise DimensionMismatchError(f"dimension n={n} must be positive")
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise DimensionMismatchError(f"indices must lie in [0, {n})")

    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size > 1:
        dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
        if dup.any():
            first = int(np.flatnonzero(dup)[0])
            raise DataFormatError(f"duplicate entry ({rows[first]}, {cols[first]})")

    if p is None:
        p = rows.size / float(n * n) if rows.size else 1.0
    return ObservationSet(rows=rows, cols=cols, vals=vals, n=int(n), p=float(p))


def require_nonempty(obs: ObservationSet) -> None:
    if obs.count == 0:
        raise EmptyObservationError("observation set is empty")


def observe_dense(
    matrix: np.ndarray,
    p: float | None = None,
    seed: int = 0,
) -> ObservationSet:
    """
    Observe a dense square matrix, optionally subsampling with Bernoulli(p).

    Args:
        matrix: n x n array.
        p: sampling rate; None keeps every entry (p = 1).
        seed: rng seed for the mask.

    Raises:
        DimensionMismatchError: non-square input.
        EmptyObservationError: the mask kept nothing.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"only square matrices are supported, got {matrix.shape}")
    n = matrix.shape[0]
    if p is None or p >= 1.0:
        rows, cols = np.divmod(np.arange(n * n, dtype=np.int64), n)
        return build_observations(rows, cols, matrix.ravel(), n, 1.0)

    rows, cols = bernoulli_mask(n, p, np.random.default_rng(seed))
    if rows.size == 0:
        raise EmptyObservationError(f"Bernoulli({p}) mask on {n}x{n} kept no entries")
    logger.info(f"Subsampled {rows.size} of {n * n} entries (p={p})")
    return build_observations(rows, cols, matrix[rows, cols], n, p)


def bernoulli_mask(
    n: int,
    p: float,
    rng: np.random.Generator,
    block_rows: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Row-major sorted indices of an iid Bernoulli(p) mask, drawn in row blocks."""
    row_parts: list[np.ndarray] = []
    col_parts: list[np.ndarray] = []
    for start in range(0, n, block_rows):
        height = min(block_rows, n - start)
        hit_r, hit_c = np.nonzero(rng.random((height, n)) < p)
        row_parts.append(hit_r.astype(np.int64) + start)
        col_parts.append(hit_c.astype(np.int64))
    return np.concatenate(row_parts), np.concatenate(col_parts)


def locate(obs: ObservationSet, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """
    Positions of (rows[k], cols[k]) within the sorted triplets of obs.

    Raises:
        DimensionMismatchError: some pair is not in Omega.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    keys = obs.rows * obs.n + obs.cols
    wanted = rows * obs.n + cols
    pos = np.searchsorted(keys, wanted)
    found = pos < keys.size
    found[found] = keys[pos[found]] == wanted[found]
    if not found.all():
        k = int(np.flatnonzero(~found)[0])
        raise DimensionMismatchError(f"entry ({rows[k]}, {cols[k]}) is not observed")
    return np.sort(pos)
