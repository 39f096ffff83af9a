"""
ARMC - Structured Truncation of Tangent-Space Elements

An element U y1^T + y2 V^T of the tangent space at (U, V) has rank at
most 2r and shares column space with [U, Q_u] and row space with
[V, Q_v]; its best rank-r approximation needs one 2r x 2r SVD.
"""

from __future__ import annotations

import numpy as np

from armc.config import LinalgSettings
from armc.linalg.dense import qr_thin, svd_small
from armc.linalg.factors import make_factors
from armc.types import LowRankFactors, StructuredTangentForm

_DEFAULTS = LinalgSettings()


def truncate_structured(
    form: StructuredTangentForm,
    r: int,
    collapse_tol: float = _DEFAULTS.collapse_tol,
) -> LowRankFactors:
    """
    Best rank-r approximation of form.u @ form.y1.T + form.y2 @ form.v.T.

    Splits y2 = U (U^T y2) + Q_u R_u and y1 = V (V^T y1) + Q_v R_v, then

        [U Q_u] [[(V^T y1)^T + U^T y2, R_v^T], [R_u, 0]] [V Q_v]^T

    and truncates the SVD of the bracketed core. Cost O(n r^2).

    Raises:
        RankCollapseError: resulting sigma_r <= collapse_tol * sigma_1.
    """
    u, v, y1, y2 = form.u, form.v, form.y1, form.y2
    width = u.shape[1]

    utv2 = u.T @ y2
    vty1 = v.T @ y1
    q_u, r_u, _ = qr_thin(y2 - u @ utv2)
    q_v, r_v, _ = qr_thin(y1 - v @ vty1)

    core = np.zeros((2 * width, 2 * width))
    core[:width, :width] = vty1.T + utv2
    core[:width, width:] = r_v.T
    core[width:, :width] = r_u

    small = svd_small(core)
    left = np.hstack([u, q_u]) @ small.p[:, :r]
    right = np.hstack([v, q_v]) @ small.q[:, :r]
    return make_factors(left, small.s[:r], right, collapse_tol)
