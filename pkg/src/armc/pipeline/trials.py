"""
ARMC - Experiment Trials

One trial = one synthetic instance at one grid cell, solved by every
requested variant and scored against its truth. Trials are pure
functions of their TrialTask, so they can run in any process and in any
order and still produce the same rows.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import logging
import math
import struct
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from armc.errors import RankCollapseError
from armc.metrics.evaluation import evaluate, sigma_for_snr
from armc.solvers.engine import solve
from armc.synthgen.generator import generate_truth, sample_instance
from armc.thresholding.schedule import beta1_from_truth, beta2_for_noise
from armc.types import (
    ExperimentKind,
    ExperimentSpec,
    ProblemInstance,
    SolverConfig,
    SolveResult,
    SolverVariant,
)

logger = logging.getLogger(__name__)

# Oversampling ratio held fixed by the runtime sweep: p = RUNTIME_SAMPLES_PER_RANK * r / n.
RUNTIME_SAMPLES_PER_RANK = 40

# Grid axes in the order they appear in rows and sort keys.
AXES: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.PHASE: ("p", "alpha", "kappa", "n", "r"),
    ExperimentKind.RUNTIME: ("n", "alpha", "r", "kappa"),
    ExperimentKind.STABILITY: ("snr", "alpha", "r", "n", "p", "kappa"),
}


@dataclass(frozen=True)
class TrialTask:
    """Everything one trial needs; picklable for process pools."""

    spec: ExperimentSpec
    cell: Mapping[str, float]
    trial: int
    seed: int


def cell_seed(master_seed: int, cell: Mapping[str, float], trial: int) -> int:
    """
    Stable 62-bit seed from the master seed, the cell's axis values and the trial.

    Independent of grid order, so adding or removing grid values leaves
    the seeds of the remaining cells unchanged.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master_seed) & 0xFFFF_FFFF_FFFF_FFFF))
    for axis in sorted(cell):
        h.update(axis.encode())
        h.update(struct.pack("<d", float(cell[axis])))
    h.update(struct.pack("<q", int(trial)))
    return int.from_bytes(h.digest(), "little") >> 2


def iter_cells(spec: ExperimentSpec) -> Iterator[dict[str, float]]:
    """Cartesian product of the grid axes used by spec.kind."""
    axes = AXES[spec.kind]
    values = [spec.grids[axis] for axis in axes]
    for combo in itertools.product(*values):
        yield dict(zip(axes, combo, strict=True))


def build_tasks(spec: ExperimentSpec) -> list[TrialTask]:
    return [
        TrialTask(spec=spec, cell=cell, trial=trial, seed=cell_seed(spec.master_seed, cell, trial))
        for cell in iter_cells(spec)
        for trial in range(spec.trials)
    ]


def sampling_rate(kind: ExperimentKind, cell: Mapping[str, float]) -> float:
    if kind is ExperimentKind.RUNTIME:
        return min(1.0, RUNTIME_SAMPLES_PER_RANK * cell["r"] / cell["n"])
    return float(cell["p"])


def make_instance(task: TrialTask) -> ProblemInstance:
    """Draw the trial's instance; stability cells derive sigma from the target SNR."""
    spec, cell = task.spec, task.cell
    n, r = int(cell["n"]), int(cell["r"])
    kappa = float(cell["kappa"])
    truth = generate_truth(n, r, kappa, task.seed)
    sigma = sigma_for_snr(truth, float(cell["snr"])) if "snr" in cell else 0.0
    return sample_instance(
        truth,
        sampling_rate(spec.kind, cell),
        float(cell["alpha"]),
        sigma,
        task.seed,
        settings=spec.synth,
        kappa=kappa,
    )


def trial_config(task: TrialTask, instance: ProblemInstance, variant: SolverVariant) -> SolverConfig:
    """Solver config for one variant, with beta1 / beta2 calibrated to the instance."""
    spec = task.spec
    rule = spec.base.rule
    beta1 = spec.fixed_beta1 if spec.fixed_beta1 is not None else beta1_from_truth(instance.truth, spec.beta_scale)
    beta2 = (
        spec.fixed_beta2
        if spec.fixed_beta2 is not None
        else beta2_for_noise(instance.sigma_noise, instance.obs.n, rule.gamma, spec.c_noise, spec.beta_scale)
    )
    return dataclasses.replace(
        spec.base,
        rank=instance.truth.r,
        rule=dataclasses.replace(rule, beta1=beta1, beta2=beta2),
        variant=variant,
        seed=task.seed,
        track_truth=instance.truth,
        track_outliers=instance.outlier_positions,
        exact_inf_max_n=spec.metrics.exact_inf_max_n,
        probe_size=spec.metrics.probe_size,
        probe_seed=spec.metrics.probe_seed,
    )


def run_trial(task: TrialTask) -> list[dict[str, Any]]:
    """
    Solve one trial with every variant in the experiment.

    A rank collapse marks the variant's row as failed (error column)
    instead of aborting the sweep.

    Returns:
        one row per variant, columns depending on spec.kind.
    """
    instance = make_instance(task)
    rows = []
    for variant in task.spec.variants:
        cfg = trial_config(task, instance, variant)
        result: SolveResult | None
        error = ""
        try:
            result = solve(instance.obs, cfg)
        except RankCollapseError as exc:
            logger.warning(f"Trial {task.trial} at {dict(task.cell)} ({variant.value}): {exc}")
            result, error = exc.partial_result, "rank_collapse"
        rows.append(_row(task, instance, variant, result, error))
    return rows


def _row(
    task: TrialTask,
    instance: ProblemInstance,
    variant: SolverVariant,
    result: SolveResult | None,
    error: str,
) -> dict[str, Any]:
    spec, cell = task.spec, task.cell
    report = evaluate(result, instance, spec.metrics) if result is not None and not error else None
    rel_inf = report.rel_inf_error if report else math.nan
    rel_fro = report.rel_fro_error if report else math.nan
    iters = result.iters if result is not None else 0

    if spec.kind is ExperimentKind.PHASE:
        return {
            "p": cell["p"],
            "alpha": cell["alpha"],
            "kappa": cell["kappa"],
            "n": int(cell["n"]),
            "r": int(cell["r"]),
            "variant": variant.value,
            "trial": task.trial,
            "seed": task.seed,
            "success": bool(report.success) if report else False,
            "rel_inf": rel_inf,
            "rel_fro": rel_fro,
            "iters": iters,
            "support_precision": report.support_precision if report else math.nan,
            "support_recall": report.support_recall if report else math.nan,
            "contained": bool(report.contained) if report else False,
            "error": error,
        }

    if spec.kind is ExperimentKind.RUNTIME:
        step_times = [rec.wall_time for rec in result.trace] if result is not None else []
        solve_time = (result.init_time if result is not None else 0.0) + float(np.sum(step_times))
        return {
            "n": int(cell["n"]),
            "alpha": cell["alpha"],
            "p": sampling_rate(spec.kind, cell),
            "r": int(cell["r"]),
            "variant": variant.value,
            "trial": task.trial,
            "seed": task.seed,
            "total_time": solve_time,
            "mean_iter_time": float(np.mean(step_times)) if step_times else math.nan,
            "iters": iters,
            "rel_inf": rel_inf,
            "success": bool(report.success) if report else False,
            "error": error,
        }

    return {
        "snr_db": cell["snr"],
        "alpha": cell["alpha"],
        "r": int(cell["r"]),
        "rel_inf": rel_inf,
        "rel_fro": rel_fro,
        "trial": task.trial,
        "variant": variant.value,
        "sigma": instance.sigma_noise,
        "iters": iters,
        "error": error,
    }
