"""
ARMC - Synthetic Instance Generator

Ground truth: Gaussian n x r factors, orthogonalized, rows clipped to
norm sqrt(r / n), re-orthogonalized; spectrum uniform on [1/kappa, 1]
with the endpoints pinned so the condition number is exactly kappa.

Observations: iid Bernoulli(p) support; each observed entry is an
outlier with probability alpha, drawn uniformly from
[-||L*||_inf, ||L*||_inf]; optional iid Gaussian(0, sigma^2) noise.
"""

from __future__ import annotations

import logging

import numpy as np

from armc.config import SynthSettings
from armc.errors import ConfigError, EmptyObservationError
from armc.linalg.dense import qr_thin
from armc.linalg.factors import factor_entries, make_factors, max_abs_entry
from armc.observations.store import bernoulli_mask, build_observations
from armc.types import LowRankFactors, ProblemInstance, ProblemParams

logger = logging.getLogger(__name__)

_DEFAULTS = SynthSettings()


def generate_truth(n: int, r: int, kappa: float, seed: int) -> LowRankFactors:
    """
    Incoherent rank-r ground truth with condition number kappa.

    Args:
        n: dimension.
        r: rank (r <= n).
        kappa: condition number (>= 1); a rank-1 truth always has kappa 1.
        seed: rng seed.
    """
    if not 1 <= r <= n:
        raise ConfigError(f"rank r={r} must lie in [1, n={n}]")
    if kappa < 1:
        raise ConfigError(f"kappa={kappa} must be >= 1")

    rng = np.random.default_rng(seed)
    u = _incoherent_basis(rng, n, r)
    v = _incoherent_basis(rng, n, r)

    sigma = np.sort(rng.uniform(1.0 / kappa, 1.0, size=r))[::-1].copy()
    sigma[0] = 1.0
    if r > 1:
        sigma[-1] = 1.0 / kappa
    return make_factors(u, sigma, v)


def _incoherent_basis(rng: np.random.Generator, n: int, r: int) -> np.ndarray:
    """Orthonormal n x r basis with row norms pulled down to sqrt(r / n)."""
    q = qr_thin(rng.standard_normal((n, r))).q
    cap = np.sqrt(r / n)
    norms = np.linalg.norm(q, axis=1)
    over = norms > cap
    q[over] *= (cap / norms[over])[:, None]
    return qr_thin(q).q


def sample_instance(
    truth: LowRankFactors,
    p: float,
    alpha: float,
    sigma_noise: float,
    seed: int,
    settings: SynthSettings = _DEFAULTS,
    kappa: float | None = None,
) -> ProblemInstance:
    """
    Observe the truth through Bernoulli(p) sampling, outliers, and noise.

    When settings.enforce_outlier_cap is set, an instance with more than
    2 * alpha * p * n outliers in some row or column is redrawn with an
    incremented sub-seed, up to settings.max_resample times; the last draw
    is kept (and flagged) if the cap is still violated.

    Args:
        truth: ground-truth factors.
        p: sampling rate in (0, 1].
        alpha: outlier probability in [0, 1).
        sigma_noise: Gaussian noise level (>= 0).
        seed: rng seed.
        kappa: recorded in params (defaults to sigma_1 / sigma_r).

    Raises:
        EmptyObservationError: the mask kept no entries.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p={p} must lie in (0, 1]")
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha={alpha} must lie in [0, 1)")
    if sigma_noise < 0:
        raise ConfigError(f"sigma_noise={sigma_noise} must be >= 0")

    n = truth.n
    linf = max_abs_entry(truth)
    cap = 2.0 * alpha * p * n
    if kappa is None:
        kappa = float(truth.sigma[0] / truth.sigma[-1])

    attempts = settings.max_resample + 1 if settings.enforce_outlier_cap else 1
    for sub_seed in range(attempts):
        rng = np.random.default_rng([seed, sub_seed])
        rows, cols = bernoulli_mask(n, p, rng)
        if rows.size == 0:
            raise EmptyObservationError(f"Bernoulli({p}) support on {n}x{n} is empty (seed {seed})")

        m = rows.size
        hit = rng.random(m) < alpha
        positions = np.flatnonzero(hit)
        outliers = rng.uniform(-linf, linf, size=positions.size)
        noise = rng.normal(0.0, sigma_noise, size=m) if sigma_noise > 0 else None

        within_cap = _max_outliers_per_line(rows, cols, positions, n) <= cap
        if within_cap or not settings.enforce_outlier_cap:
            break
        logger.warning(
            f"Outlier cap {cap:.1f} per row/column exceeded (seed {seed}, draw {sub_seed}); resampling"
        )
    else:
        logger.warning(f"Outlier cap still exceeded after {attempts} draws; keeping last draw")

    vals = factor_entries(truth, rows, cols)
    vals[positions] += outliers
    if noise is not None:
        vals += noise

    obs = build_observations(rows, cols, vals, n, p)
    params = ProblemParams(
        n=n,
        r=truth.r,
        kappa=kappa,
        p=p,
        alpha=alpha,
        sigma=sigma_noise,
        seed=seed,
        resamples=sub_seed,
        cap_satisfied=bool(within_cap),
    )
    return ProblemInstance(
        truth=truth,
        outlier_positions=positions,
        outlier_values=outliers,
        sigma_noise=sigma_noise,
        obs=obs,
        params=params,
        truth_linf=linf,
    )


def _max_outliers_per_line(
    rows: np.ndarray, cols: np.ndarray, positions: np.ndarray, n: int
) -> int:
    """Largest outlier count over all rows and columns."""
    if positions.size == 0:
        return 0
    per_row = np.bincount(rows[positions], minlength=n).max()
    per_col = np.bincount(cols[positions], minlength=n).max()
    return int(max(per_row, per_col))
