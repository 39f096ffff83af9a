"""
ARMC - Scalar Thresholding Operators

hard:  0 if |x| <= lam else x
soft:  sign(x) * max(|x| - lam, 0)
scad:  soft for |x| <= 2 lam,
       ((a - 1) x - sign(x) a lam) / (a - 2) for 2 lam < |x| < a lam,
       x for |x| >= a lam

Every kind vanishes on |x| <= lam and moves x by at most lam. Soft and
SCAD are Lipschitz with K = 1 and K = (a - 1) / (a - 2); hard is not
Lipschitz at +-lam.
"""

from __future__ import annotations

import math

import numpy as np

from armc.errors import ThresholdError
from armc.types import SparseValues, ThresholdKind, ThresholdRule

# B with |T(x) - x| <= B lam, shared by every ThresholdKind
DEVIATION_BOUND = 1.0


def threshold_array(rule: ThresholdRule, x: np.ndarray, lam: float) -> np.ndarray:
    """Apply the rule's operator entrywise at level lam."""
    if not lam > 0:
        raise ThresholdError(f"threshold level must be positive, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    mag = np.abs(x)

    if rule.kind is ThresholdKind.HARD:
        return np.where(mag <= lam, 0.0, x)

    soft = np.sign(x) * np.maximum(mag - lam, 0.0)
    if rule.kind is ThresholdKind.SOFT:
        return soft

    a = rule.scad_a
    middle = ((a - 1.0) * x - np.sign(x) * a * lam) / (a - 2.0)
    return np.where(mag <= 2.0 * lam, soft, np.where(mag < a * lam, middle, x))


def apply_scalar(rule: ThresholdRule, x: float, lam: float) -> float:
    return float(threshold_array(rule, np.float64(x), lam))


def apply_sparse(rule: ThresholdRule, vals: SparseValues, lam: float) -> SparseValues:
    """Entrywise threshold; entries inside the dead zone become exact zeros."""
    return SparseValues(threshold_array(rule, vals.vals, lam))


def lipschitz_constant(rule: ThresholdRule) -> float:
    """K with |T(x) - T(y)| <= K |x - y|; infinite for hard thresholding."""
    if rule.kind is ThresholdKind.SOFT:
        return 1.0
    if rule.kind is ThresholdKind.SCAD:
        return (rule.scad_a - 1.0) / (rule.scad_a - 2.0)
    return math.inf

