"""
ARMC - Threshold Schedule and Calibration

xi_t = beta1 * gamma**t + beta2, with beta1 on the scale of ||L*||_inf
and beta2 a noise floor proportional to sigma * sqrt(log n).
"""

from __future__ import annotations

import math

import numpy as np

from armc.config import ThresholdSettings
from armc.errors import ConfigError
from armc.metrics.evaluation import incoherence
from armc.types import LowRankFactors, ObservationSet, ThresholdKind, ThresholdRule

_DEFAULTS = ThresholdSettings()


# Smallest positive double; levels that underflow are raised to it
XI_FLOOR = math.ulp(0.0)


def schedule(rule: ThresholdRule, t: int) -> float:
    """beta1 * gamma**t + beta2, never below XI_FLOOR."""
    if t < 0:
        raise ConfigError(f"iteration t={t} must be >= 0")
    return max(rule.beta1 * rule.gamma**t + rule.beta2, XI_FLOOR)


def beta1_from_truth(truth: LowRankFactors, scale: float = _DEFAULTS.beta_scale) -> float:
    """scale * mu * r * sigma_1 / n with mu the measured incoherence of the truth."""
    mu = max(incoherence(truth))
    return scale * mu * truth.r * float(truth.sigma[0]) / truth.n


def beta1_from_data(obs: ObservationSet) -> float:
    """Largest observed magnitude; bounds ||L*||_inf plus outliers for real data."""
    if obs.count == 0:
        raise ConfigError("cannot calibrate beta1 on an empty observation set")
    return float(np.abs(obs.vals).max())


def beta2_for_noise(
    sigma: float,
    n: int,
    gamma: float,
    c_noise: float = _DEFAULTS.c_noise,
    scale: float = _DEFAULTS.beta_scale,
) -> float:
    """scale * (1 + gamma) * c_noise * sigma * sqrt(log n); zero when noiseless."""
    if sigma <= 0:
        return 0.0
    return scale * (1.0 + gamma) * c_noise * sigma * math.sqrt(math.log(n))


def rule_from_settings(
    settings: ThresholdSettings,
    beta1: float,
    beta2: float = 0.0,
) -> ThresholdRule:
    """ThresholdRule from config strings; explicit settings.beta1 / beta2 win."""
    try:
        kind = ThresholdKind(settings.kind.lower())
    except ValueError as exc:
        raise ConfigError(f"unknown threshold kind {settings.kind!r}") from exc
    return ThresholdRule(
        kind=kind,
        beta1=settings.beta1 if settings.beta1 is not None else beta1,
        beta2=settings.beta2 if settings.beta2 is not None else beta2,
        gamma=settings.gamma,
        scad_a=settings.scad_a,
    )
