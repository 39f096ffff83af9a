"""
ARMC - Solve Loop

initialize, then the variant's step until the relative change of the
low-rank iterate drops to cfg.tol_rel_change, the tracked truth error
drops to cfg.truth_tol, or cfg.max_iters steps have run.
"""

from __future__ import annotations

import logging
import time

from armc.errors import RankCollapseError
from armc.linalg.factors import fro_distance, fro_norm, max_abs_entry
from armc.metrics.evaluation import ProbeSet, inf_error_probe, rel_inf_error, support_stats
from armc.solvers.steps import STEPS, effective_config, initialize
from armc.thresholding.schedule import schedule
from armc.types import (
    IterationRecord,
    LowRankFactors,
    ObservationSet,
    SolverConfig,
    SolveResult,
    SparseValues,
)

logger = logging.getLogger(__name__)


class _TruthTracker:
    """Entrywise error of iterates against a known truth."""

    def __init__(self, cfg: SolverConfig):
        truth = cfg.track_truth
        assert truth is not None
        self.truth = truth
        self.linf = max_abs_entry(truth)
        self.probe: ProbeSet | None = inf_error_probe(
            truth.n, cfg.exact_inf_max_n, cfg.probe_size, cfg.probe_seed
        )
        self.mode = "exact" if self.probe is None else "probe"

    def error(self, l: LowRankFactors) -> float:
        return rel_inf_error(l, self.truth, self.linf, self.probe)


def solve(obs: ObservationSet, cfg: SolverConfig) -> SolveResult:
    """
    Run one solver to completion.

    Args:
        obs: observed entries of M.
        cfg: solver configuration; the threshold kind is reconciled with
            the variant (rrmc forces hard, rmc rejects it).

    Returns:
        SolveResult whose trace holds one record per step.

    Raises:
        EmptyObservationError: obs is empty.
        ConfigError: invalid rank / threshold combination.
        RankCollapseError: a truncation lost rank; the partial result
            (trace up to the failure) is attached as partial_result.
    """
    cfg = effective_config(cfg)
    step = STEPS[cfg.variant]
    tracker = _TruthTracker(cfg) if cfg.track_truth is not None else None

    start = time.perf_counter()
    s, l = initialize(obs, cfg)
    init_time = time.perf_counter() - start
    initial_error = tracker.error(l) if tracker is not None else None
    logger.debug(
        f"{cfg.variant.value}: initialized n={obs.n} r={cfg.rank} |Omega|={obs.count} in {init_time:.3f}s"
    )

    trace: list[IterationRecord] = []
    stop_reason = "max_iters"
    converged = False

    for t in range(1, cfg.max_iters + 1):
        step_start = time.perf_counter()
        try:
            s, l_next = step(l, obs, cfg, t)
        except RankCollapseError as exc:
            logger.warning(f"{cfg.variant.value}: rank collapse at iteration {t}: {exc}")
            exc.partial_result = _result(
                l, s, trace, cfg, "rank_collapse", False, init_time, start, tracker, initial_error
            )
            raise
        wall = time.perf_counter() - step_start

        base = fro_norm(l)
        rel_change = fro_distance(l_next, l) / base if base > 0 else float("inf")

        err = tracker.error(l_next) if tracker is not None else None
        precision = recall = contained = None
        if cfg.track_outliers is not None:
            stats = support_stats(s, cfg.track_outliers)
            precision, recall, contained = stats.precision, stats.recall, stats.contained

        trace.append(
            IterationRecord(
                iteration=t,
                xi=schedule(cfg.rule, t),
                wall_time=wall,
                rel_change=rel_change,
                support_size=int(s.nonzero_positions().size),
                rel_inf_error=err,
                support_precision=precision,
                support_recall=recall,
                support_contained=contained,
            )
        )
        logger.debug(
            f"{cfg.variant.value} t={t}: xi={trace[-1].xi:.3e} rel_change={rel_change:.3e} "
            f"|supp S|={trace[-1].support_size}" + (f" err={err:.3e}" if err is not None else "")
        )
        l = l_next

        if cfg.truth_tol is not None and err is not None and err <= cfg.truth_tol:
            stop_reason, converged = "truth_tol", True
            break
        if rel_change <= cfg.tol_rel_change:
            stop_reason, converged = "rel_change", True
            break

    result = _result(l, s, trace, cfg, stop_reason, converged, init_time, start, tracker, initial_error)
    logger.info(
        f"{cfg.variant.value}: {stop_reason} after {result.iters} iterations "
        f"({result.total_time:.2f}s)"
    )
    return result


def _result(
    l: LowRankFactors,
    s: SparseValues,
    trace: list[IterationRecord],
    cfg: SolverConfig,
    stop_reason: str,
    converged: bool,
    init_time: float,
    start: float,
    tracker: _TruthTracker | None,
    initial_error: float | None,
) -> SolveResult:
    return SolveResult(
        l_out=l,
        s_out=s,
        iters=len(trace),
        converged=converged,
        trace=list(trace),
        variant=cfg.variant,
        stop_reason=stop_reason,
        init_time=init_time,
        total_time=time.perf_counter() - start,
        truth_error_mode=tracker.mode if tracker is not None else None,
        initial_rel_inf_error=initial_error,
    )
