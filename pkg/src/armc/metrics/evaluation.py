"""
ARMC - Evaluation Metrics

Relative entrywise and Frobenius errors, the recovery criterion,
outlier-support precision / recall / containment, incoherence, and SNR.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from armc.config import MetricsSettings
from armc.errors import ConfigError, DimensionMismatchError
from armc.linalg.factors import densify, factor_entries, fro_distance, fro_norm
from armc.types import EvalReport, LowRankFactors, ProblemInstance, SolveResult, SparseValues

_DEFAULTS = MetricsSettings()

# Relative slack on the success comparison so an error equal to the
# tolerance up to rounding still counts.
_SUCCESS_SLACK = 1e-9


class ProbeSet(NamedTuple):
    rows: np.ndarray
    cols: np.ndarray


class SupportStats(NamedTuple):
    precision: float
    recall: float
    contained: bool
    size: int


def build_probe(n: int, size: int, seed: int) -> ProbeSet:
    """Fixed random entry sample used for ||.||_inf when n is too large to densify."""
    rng = np.random.default_rng(seed)
    return ProbeSet(rng.integers(0, n, size=size), rng.integers(0, n, size=size))


def inf_error_probe(
    n: int,
    exact_max_n: int = _DEFAULTS.exact_inf_max_n,
    size: int = _DEFAULTS.probe_size,
    seed: int = _DEFAULTS.probe_seed,
) -> ProbeSet | None:
    """None when the exact (densified) error is affordable, else a probe set."""
    if n <= exact_max_n:
        return None
    return build_probe(n, size, seed)


def max_abs_difference(
    a: LowRankFactors,
    b: LowRankFactors,
    probe: ProbeSet | None = None,
) -> float:
    """max |A - B| over all entries, or over the probe entries when given."""
    if a.n != b.n:
        raise DimensionMismatchError(f"dimension mismatch: {a.n} vs {b.n}")
    if probe is None:
        return float(np.abs(densify(a) - densify(b)).max(initial=0.0))
    diff = factor_entries(a, probe.rows, probe.cols) - factor_entries(b, probe.rows, probe.cols)
    return float(np.abs(diff).max(initial=0.0))


def rel_inf_error(
    estimate: LowRankFactors,
    truth: LowRankFactors,
    truth_linf: float,
    probe: ProbeSet | None = None,
) -> float:
    """||estimate - truth||_inf / ||truth||_inf."""
    return max_abs_difference(estimate, truth, probe) / truth_linf


def rel_fro_error(estimate: LowRankFactors, truth: LowRankFactors) -> float:
    """||estimate - truth||_F / ||truth||_F without densifying."""
    return fro_distance(estimate, truth) / fro_norm(truth)


def support_stats(s: SparseValues, outlier_positions: np.ndarray) -> SupportStats:
    """
    Compare the nonzeros of s against the true outlier positions (both index Omega).

    Empty sets count as perfect: precision is 1 when nothing is flagged and
    recall is 1 when there is nothing to find.
    """
    flagged = s.nonzero_positions()
    hits = int(np.isin(flagged, outlier_positions, assume_unique=True).sum())
    precision = hits / flagged.size if flagged.size else 1.0
    recall = hits / outlier_positions.size if outlier_positions.size else 1.0
    return SupportStats(precision, recall, hits == flagged.size, int(flagged.size))


def is_success(rel_inf: float, tol: float = _DEFAULTS.success_tol) -> bool:
    return rel_inf <= tol * (1.0 + _SUCCESS_SLACK)


def evaluate(
    result: SolveResult,
    instance: ProblemInstance,
    settings: MetricsSettings = _DEFAULTS,
) -> EvalReport:
    """
    Score a solve against its generating instance.

    The entrywise error is exact for n <= settings.exact_inf_max_n and
    taken over a seeded probe set above; the Frobenius error is always exact.
    """
    truth = instance.truth
    if result.l_out.n != truth.n:
        raise DimensionMismatchError(f"result is {result.l_out.n}x{result.l_out.n}, truth is {truth.n}x{truth.n}")
    if result.s_out.count != instance.obs.count:
        raise DimensionMismatchError("sparse estimate is not aligned with the instance observations")

    probe = inf_error_probe(truth.n, settings.exact_inf_max_n, settings.probe_size, settings.probe_seed)
    rel_inf = rel_inf_error(result.l_out, truth, instance.truth_linf, probe)
    rel_fro = rel_fro_error(result.l_out, truth)
    stats = support_stats(result.s_out, instance.outlier_positions)
    return EvalReport(
        rel_inf_error=rel_inf,
        rel_fro_error=rel_fro,
        success=is_success(rel_inf, settings.success_tol),
        support_precision=stats.precision,
        support_recall=stats.recall,
        contained=stats.contained,
        inf_mode="exact" if probe is None else "probe",
    )


def incoherence(f: LowRankFactors) -> tuple[float, float]:
    """(n / r) * max squared row norm of u and of v."""
    scale = f.n / f.r
    mu_u = scale * float(np.max(np.einsum("ij,ij->i", f.u, f.u)))
    mu_v = scale * float(np.max(np.einsum("ij,ij->i", f.v, f.v)))
    return mu_u, mu_v


def snr_db(instance: ProblemInstance) -> float:
    """10 log10(||L*||_F^2 / (n^2 sigma^2)): mean signal power over noise power."""
    return snr_db_for(instance.truth, instance.sigma_noise)


def snr_db_for(truth: LowRankFactors, sigma: float) -> float:
    if sigma <= 0:
        raise ConfigError("SNR is undefined for a noiseless instance")
    power = fro_norm(truth) ** 2 / float(truth.n) ** 2
    return 10.0 * math.log10(power / sigma**2)


def sigma_for_snr(truth: LowRankFactors, target_db: float) -> float:
    """Noise level giving the target SNR: ||L*||_F / (n * 10**(dB / 20))."""
    return fro_norm(truth) / (truth.n * 10.0 ** (target_db / 20.0))
