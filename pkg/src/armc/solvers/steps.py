"""
ARMC - Solver Steps

Each step thresholds the residual on Omega into a sparse estimate S^t,
forms the sparse correction G = p^-1 P_Omega(M - L^t - S^t), and maps
W = L^t + G back to rank r:

    armc:  tangent-space projection of W, then structured truncation
    rmc:   truncated SVD of W, continuous thresholding
    rrmc:  truncated SVD of W, hard thresholding

W is never densified; every product goes through the factors of L^t and
the CSR view of G.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Callable

import numpy as np

from armc.errors import ConfigError
from armc.linalg.truncated import truncated_svd_operator
from armc.linalg.structured import truncate_structured
from armc.observations.kernels import residual, sparse_times_dense, support_matrix
from armc.observations.store import require_nonempty
from armc.thresholding.operators import apply_sparse
from armc.thresholding.schedule import schedule
from armc.types import (
    LowRankFactors,
    ObservationSet,
    SolverConfig,
    SolverVariant,
    SparseValues,
    StructuredTangentForm,
    ThresholdKind,
)

logger = logging.getLogger(__name__)

StepFn = Callable[[LowRankFactors, ObservationSet, SolverConfig, int], tuple[SparseValues, LowRankFactors]]


def effective_config(cfg: SolverConfig) -> SolverConfig:
    """
    Reconcile the threshold kind with the variant.

    rrmc always thresholds hard; rmc is the continuous-thresholding
    baseline and rejects a hard rule; armc takes any kind.
    """
    kind = cfg.rule.kind
    if cfg.variant is SolverVariant.RRMC and kind is not ThresholdKind.HARD:
        logger.debug(f"rrmc uses hard thresholding; overriding {kind.value}")
        return dataclasses.replace(cfg, rule=dataclasses.replace(cfg.rule, kind=ThresholdKind.HARD))
    if cfg.variant is SolverVariant.RMC and kind is ThresholdKind.HARD:
        raise ConfigError("rmc needs a continuous threshold (soft or scad); use rrmc for hard")
    return cfg


def initialize(obs: ObservationSet, cfg: SolverConfig) -> tuple[SparseValues, LowRankFactors]:
    """
    S^0 = T_{xi_0}(P_Omega(M)), L^1 = P_r(p^-1 P_Omega(M - S^0)).

    Raises:
        EmptyObservationError: obs has no entries.
        ConfigError: rank exceeds n.
        RankCollapseError: the spectral estimate has fewer than r
            significant directions.
    """
    require_nonempty(obs)
    if cfg.rank > obs.n:
        raise ConfigError(f"rank={cfg.rank} exceeds dimension n={obs.n}")

    cfg = effective_config(cfg)
    s0 = apply_sparse(cfg.rule, SparseValues(obs.vals), schedule(cfg.rule, 0))
    g = SparseValues((obs.vals - s0.vals) / obs.p)

    gm = support_matrix(obs, g)
    l1 = truncated_svd_operator(
        lambda x: np.asarray(gm @ x),
        lambda x: np.asarray(gm.T @ x),
        obs.n,
        cfg.rank,
        oversample=cfg.oversample,
        tol=cfg.svd_tol,
        seed=[cfg.seed, 0],
    )
    return s0, l1


def _sparse_and_correction(
    l: LowRankFactors, obs: ObservationSet, cfg: SolverConfig, t: int
) -> tuple[SparseValues, SparseValues]:
    """S^t and G = p^-1 (M - L^t - S^t) on Omega."""
    s = apply_sparse(cfg.rule, residual(obs, l), schedule(cfg.rule, t))
    g = SparseValues(residual(obs, l, s).vals / obs.p)
    return s, g


def armc_step(
    l: LowRankFactors, obs: ObservationSet, cfg: SolverConfig, t: int
) -> tuple[SparseValues, LowRankFactors]:
    """
    One ARMC iteration: L^{t+1} = P_r P_T(L^t + G).

    With W = L^t + G the tangent projection is U y1^T + y2 V^T where

        y2 = W V   = U Sigma + G V
        A  = W^T U = V Sigma + G^T U
        C  = U^T W V = U^T G V + Sigma
        y1 = A - V C^T

    Cost O(|Omega| r + n r^2).
    """
    s, g = _sparse_and_correction(l, obs, cfg, t)
    u, v = l.u, l.v
    sig = np.diag(l.sigma)

    gv = sparse_times_dense(obs, g, v)
    gtu = sparse_times_dense(obs, g, u, transpose=True)
    y2 = u @ sig + gv
    a = v @ sig + gtu
    c = u.T @ gv + sig
    y1 = a - v @ c.T

    form = StructuredTangentForm(u=u, v=v, y1=y1, y2=y2)
    return s, truncate_structured(form, cfg.rank)


def _full_truncation_step(
    l: LowRankFactors, obs: ObservationSet, cfg: SolverConfig, t: int
) -> tuple[SparseValues, LowRankFactors]:
    """L^{t+1} = P_r(L^t + G) via the implicit operator x -> U Sigma V^T x + G x."""
    s, g = _sparse_and_correction(l, obs, cfg, t)
    u, sigma, v = l.u, l.sigma, l.v
    gm = support_matrix(obs, g)

    def apply(x: np.ndarray) -> np.ndarray:
        return u @ (sigma[:, None] * (v.T @ x)) + np.asarray(gm @ x)

    def apply_adjoint(x: np.ndarray) -> np.ndarray:
        return v @ (sigma[:, None] * (u.T @ x)) + np.asarray(gm.T @ x)

    l_next = truncated_svd_operator(
        apply,
        apply_adjoint,
        obs.n,
        cfg.rank,
        oversample=cfg.oversample,
        tol=cfg.svd_tol,
        seed=[cfg.seed, t],
    )
    return s, l_next


def rmc_step(
    l: LowRankFactors, obs: ObservationSet, cfg: SolverConfig, t: int
) -> tuple[SparseValues, LowRankFactors]:
    """Projection-free step with a soft or SCAD threshold."""
    if cfg.rule.kind is ThresholdKind.HARD:
        raise ConfigError("rmc_step needs a soft or scad threshold")
    return _full_truncation_step(l, obs, cfg, t)


def rrmc_step(
    l: LowRankFactors, obs: ObservationSet, cfg: SolverConfig, t: int
) -> tuple[SparseValues, LowRankFactors]:
    """Projection-free step with hard thresholding at the same schedule."""
    if cfg.rule.kind is not ThresholdKind.HARD:
        cfg = dataclasses.replace(cfg, rule=dataclasses.replace(cfg.rule, kind=ThresholdKind.HARD))
    return _full_truncation_step(l, obs, cfg, t)


STEPS: dict[SolverVariant, StepFn] = {
    SolverVariant.ARMC: armc_step,
    SolverVariant.RMC: rmc_step,
    SolverVariant.RRMC: rrmc_step,
}
