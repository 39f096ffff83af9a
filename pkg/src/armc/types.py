"""
ARMC - Core Type Definitions

All dataclasses and enums used across the system. Arrays are numpy
float64 / int64; instances are treated as immutable once built.
Invariant checks here are shape-level only; the constructors in the
subpackages enforce numerical invariants.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from armc.config import (
    LinalgSettings,
    MetricsSettings,
    SolverSettings,
    SynthSettings,
    ThresholdSettings,
)
from armc.errors import ConfigError, DimensionMismatchError

_LINALG = LinalgSettings()
_METRICS = MetricsSettings()
_SOLVER = SolverSettings()
_THRESHOLD = ThresholdSettings()


@dataclass(frozen=True, eq=False)
class LowRankFactors:
    """Compact SVD u @ diag(sigma) @ v.T of a square rank-r matrix."""

    u: np.ndarray  # n x r, orthonormal columns
    sigma: np.ndarray  # r, non-increasing, > 0
    v: np.ndarray  # n x r, orthonormal columns

    def __post_init__(self) -> None:
        if self.u.ndim != 2 or self.u.shape != self.v.shape:
            raise DimensionMismatchError(
                f"u {self.u.shape} and v {self.v.shape} must be equal n x r arrays"
            )
        if self.sigma.shape != (self.u.shape[1],):
            raise DimensionMismatchError(
                f"sigma has shape {self.sigma.shape}, expected ({self.u.shape[1]},)"
            )

    @property
    def n(self) -> int:
        return int(self.u.shape[0])

    @property
    def r(self) -> int:
        return int(self.u.shape[1])


@dataclass(frozen=True, eq=False)
class StructuredTangentForm:
    """The matrix u @ y1.T + y2 @ v.T (an element of the tangent space, rank <= 2r)."""

    u: np.ndarray  # n x r orthonormal
    v: np.ndarray  # n x r orthonormal
    y1: np.ndarray  # n x r right-factor correction
    y2: np.ndarray  # n x r left-factor correction

    def __post_init__(self) -> None:
        shape = self.u.shape
        for name in ("v", "y1", "y2"):
            if getattr(self, name).shape != shape:
                raise DimensionMismatchError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Observed entries (rows[t], cols[t]) -> vals[t], sorted by (row, col)."""

    rows: np.ndarray  # int64
    cols: np.ndarray  # int64
    vals: np.ndarray  # float64 observed values M_ij
    n: int
    p: float  # Sampling rate used as the 1/p rescaling

    def __post_init__(self) -> None:
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise DimensionMismatchError("rows, cols and vals must have equal length")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"sampling rate p={self.p} must lie in (0, 1]")

    @property
    def count(self) -> int:
        return int(len(self.vals))

    @cached_property
    def row_ptr(self) -> np.ndarray:
        """CSR row pointer for the sorted triplets."""
        counts = np.bincount(self.rows, minlength=self.n)
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr


@dataclass(frozen=True, eq=False)
class SparseValues:
    """Values aligned index-for-index with an ObservationSet's triplets."""

    vals: np.ndarray

    @property
    def count(self) -> int:
        return int(len(self.vals))

    def nonzero_positions(self) -> np.ndarray:
        return np.flatnonzero(self.vals)


class ThresholdKind(Enum):
    """Scalar thresholding operator family."""

    HARD = "hard"
    SOFT = "soft"
    SCAD = "scad"


@dataclass(frozen=True)
class ThresholdRule:
    """Operator kind plus the schedule xi_t = beta1 * gamma**t + beta2."""

    kind: ThresholdKind
    beta1: float
    beta2: float = 0.0
    gamma: float = _THRESHOLD.gamma
    scad_a: float = _THRESHOLD.scad_a

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma={self.gamma} must lie in (0, 1)")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ConfigError(f"beta1={self.beta1}, beta2={self.beta2} must be non-negative")
        if self.kind is ThresholdKind.SCAD and self.scad_a <= 2.0:
            raise ConfigError(f"SCAD shape a={self.scad_a} must exceed 2")


class SolverVariant(Enum):
    """Low-rank update rule."""

    ARMC = "armc"  # tangent-space projection, then structured truncation
    RMC = "rmc"  # full truncation, continuous thresholding
    RRMC = "rrmc"  # full truncation, hard thresholding


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Inputs of one solve."""

    rank: int
    rule: ThresholdRule
    variant: SolverVariant = SolverVariant.ARMC
    max_iters: int = _SOLVER.max_iters
    tol_rel_change: float = _SOLVER.tol_rel_change
    seed: int = _SOLVER.seed
    oversample: int = _LINALG.oversample
    svd_tol: float = _LINALG.svd_tol
    # Diagnostics (all optional)
    track_truth: LowRankFactors | None = None
    track_outliers: np.ndarray | None = None  # positions into the observation set
    truth_tol: float | None = _SOLVER.truth_tol
    exact_inf_max_n: int = _METRICS.exact_inf_max_n
    probe_size: int = _METRICS.probe_size
    probe_seed: int = _METRICS.probe_seed

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ConfigError(f"rank={self.rank} must be >= 1")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters={self.max_iters} must be >= 1")
        if self.tol_rel_change < 0:
            raise ConfigError(f"tol_rel_change={self.tol_rel_change} must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    """Diagnostics of iteration t (threshold xi_t, sparse S_t, new iterate L_{t+1})."""

    iteration: int
    xi: float
    wall_time: float  # seconds spent in the step itself
    rel_change: float  # ||L_{t+1} - L_t||_F / ||L_t||_F
    support_size: int
    rel_inf_error: float | None = None  # of L_{t+1}, when truth is tracked
    support_precision: float | None = None
    support_recall: float | None = None
    support_contained: bool | None = None


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Output of a solve."""

    l_out: LowRankFactors
    s_out: SparseValues
    iters: int
    converged: bool
    trace: list[IterationRecord]
    variant: SolverVariant
    stop_reason: str  # rel_change | truth_tol | max_iters | rank_collapse
    init_time: float = 0.0
    total_time: float = 0.0
    truth_error_mode: str | None = None  # exact | probe
    initial_rel_inf_error: float | None = None  # of L_1

    def to_dict(self) -> dict[str, Any]:
        """Scalar summary for JSON output."""
        last = self.trace[-1] if self.trace else None
        return {
            "variant": self.variant.value,
            "iters": self.iters,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "rank": self.l_out.r,
            "n": self.l_out.n,
            "final_xi": last.xi if last else None,
            "final_rel_change": last.rel_change if last else None,
            "final_rel_inf_error": last.rel_inf_error if last else None,
            "outliers_detected": int(np.count_nonzero(self.s_out.vals)),
            "total_time": self.total_time,
        }


@dataclass(frozen=True)
class ProblemParams:
    """Generation parameters of a synthetic instance."""

    n: int
    r: int
    kappa: float
    p: float
    alpha: float
    sigma: float
    seed: int
    resamples: int = 0
    cap_satisfied: bool = True


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Ground truth plus the composed observations M = L* + S* + N on Omega."""

    truth: LowRankFactors
    outlier_positions: np.ndarray  # sorted positions into obs triplets
    outlier_values: np.ndarray
    sigma_noise: float
    obs: ObservationSet
    params: ProblemParams
    truth_linf: float  # ||L*||_inf


@dataclass(frozen=True)
class EvalReport:
    """Recovery quality of one solve against a known instance."""

    rel_inf_error: float
    rel_fro_error: float
    success: bool
    support_precision: float
    support_recall: float
    contained: bool
    inf_mode: str = "exact"  # exact | probe

    def to_dict(self) -> dict[str, Any]:
        return {
            "rel_inf_error": self.rel_inf_error,
            "rel_fro_error": self.rel_fro_error,
            "success": self.success,
            "support_precision": self.support_precision,
            "support_recall": self.support_recall,
            "contained": self.contained,
            "inf_mode": self.inf_mode,
        }


class ExperimentKind(Enum):
    """Harness subcommands."""

    PHASE = "phase"
    RUNTIME = "runtime"
    STABILITY = "stability"
    SOLVE = "solve"
    GENERATE = "generate"


_SWEPT_AXES = {
    ExperimentKind.PHASE: ("p", "alpha", "kappa"),
    ExperimentKind.RUNTIME: ("n", "alpha"),
    ExperimentKind.STABILITY: ("snr", "alpha", "r"),
}


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One experiment sweep."""

    kind: ExperimentKind
    grids: Mapping[str, tuple[float, ...]]  # axis name -> values; fixed axes hold one value
    trials: int
    base: SolverConfig  # template; beta1 / beta2 are re-derived per instance unless fixed
    out_path: Path
    variants: tuple[SolverVariant, ...] = (SolverVariant.ARMC,)
    master_seed: int = 0
    jobs: int = 1
    fixed_beta1: float | None = None
    fixed_beta2: float | None = None
    beta_scale: float = _THRESHOLD.beta_scale
    c_noise: float = _THRESHOLD.c_noise
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    synth: SynthSettings = field(default_factory=SynthSettings)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials={self.trials} must be >= 1")
        for axis in _SWEPT_AXES.get(self.kind, ()):
            if not self.grids.get(axis):
                raise ConfigError(f"{self.kind.value} experiment needs a non-empty '{axis}' grid")


@dataclass(frozen=True, eq=False)
class SolveOutputs:
    """Files written by a solve on ingested data, plus its results."""

    factors: Path
    sparse: Path
    trace: Path
    result: SolveResult
    report: EvalReport | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "factors": str(self.factors),
            "sparse": str(self.sparse),
            "trace": str(self.trace),
            "result": self.result.to_dict(),
            "report": self.report.to_dict() if self.report else None,
        }
