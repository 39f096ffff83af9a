"""
ARMC - Experiment Orchestration

Flow: spec -> tasks -> trials (concurrent up to jobs) -> sorted rows ->
CSV + Parquet -> cell summary.

ExperimentRunner.run() is the single async entry point; trials run in a
process pool and everything around them is synchronous. Row order is
fixed by sorting, never by completion order.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from armc.config import ArmcConfig
from armc.errors import ConfigError, OutputError, RankCollapseError
from armc.explain.summary import describe_solve
from armc.ingest.formats import (
    is_matrix_file,
    read_factors,
    read_matrix,
    read_observations,
    read_outlier_positions,
    write_coo,
    write_factors,
    write_instance,
)
from armc.linalg.factors import max_abs_entry
from armc.metrics.evaluation import evaluate
from armc.observations.store import observe_dense
from armc.pipeline.trials import AXES, build_tasks, run_trial
from armc.solvers.engine import solve
from armc.synthgen.generator import generate_truth, sample_instance
from armc.thresholding.schedule import beta1_from_data, rule_from_settings
from armc.types import (
    EvalReport,
    ExperimentKind,
    ExperimentSpec,
    IterationRecord,
    ObservationSet,
    ProblemInstance,
    ProblemParams,
    SolveOutputs,
    SolverConfig,
    SolveResult,
    SolverVariant,
)

logger = logging.getLogger(__name__)


def parse_variant(name: str) -> SolverVariant:
    try:
        return SolverVariant(name.lower())
    except ValueError as exc:
        raise ConfigError(f"unknown variant {name!r}; expected armc, rmc or rrmc") from exc


def solver_config(config: ArmcConfig, rank: int, beta1: float, beta2: float = 0.0) -> SolverConfig:
    """SolverConfig from the flat settings."""
    return SolverConfig(
        rank=rank,
        rule=rule_from_settings(config.threshold, beta1, beta2),
        variant=parse_variant(config.solver.variant),
        max_iters=config.solver.max_iters,
        tol_rel_change=config.solver.tol_rel_change,
        seed=config.solver.seed,
        oversample=config.linalg.oversample,
        svd_tol=config.linalg.svd_tol,
        truth_tol=config.solver.truth_tol,
        exact_inf_max_n=config.metrics.exact_inf_max_n,
        probe_size=config.metrics.probe_size,
        probe_seed=config.metrics.probe_seed,
    )


def build_spec(
    kind: ExperimentKind,
    config: ArmcConfig,
    out_path: Path,
    variants: tuple[str, ...] | None = None,
) -> ExperimentSpec:
    """
    Experiment spec for a sweep from the flat configuration.

    Swept and fixed axes both become grids; fixed axes hold one value.
    Phase and runtime stop on the truth tolerance; stability runs to the
    relative-change tolerance since noisy runs never reach it.
    """
    ex = config.experiment
    names = variants or ex.variants
    base = dataclasses.replace(
        solver_config(config, ex.r, beta1=0.0),
        max_iters=ex.max_iters,
        truth_tol=ex.truth_tol if kind is not ExperimentKind.STABILITY else None,
    )
    trials = ex.trials
    if kind is ExperimentKind.PHASE:
        grids = {"p": ex.p_list, "alpha": ex.alpha_list, "kappa": ex.kappa_list, "n": (ex.n,), "r": (ex.r,)}
    elif kind is ExperimentKind.RUNTIME:
        grids = {"n": ex.n_list, "alpha": ex.runtime_alpha_list, "r": (ex.runtime_r,), "kappa": (ex.kappa,)}
        trials = ex.runtime_trials
    elif kind is ExperimentKind.STABILITY:
        grids = {
            "snr": ex.snr_list,
            "alpha": ex.stability_alpha_list,
            "r": ex.r_list,
            "n": (ex.n,),
            "p": (ex.stability_p,),
            "kappa": (ex.kappa,),
        }
    else:
        raise ConfigError(f"{kind.value} is not a sweep")

    return ExperimentSpec(
        kind=kind,
        grids={axis: tuple(values) for axis, values in grids.items()},
        trials=trials,
        base=base,
        out_path=out_path,
        variants=tuple(parse_variant(v) for v in names),
        master_seed=ex.seed,
        jobs=ex.jobs,
        fixed_beta1=config.threshold.beta1,
        fixed_beta2=config.threshold.beta2,
        beta_scale=config.threshold.beta_scale,
        c_noise=config.threshold.c_noise,
        metrics=config.metrics,
        synth=config.synth,
    )


class ExperimentRunner:
    """
    Runs one sweep and persists its tables.

    Writes <out>.csv (one row per trial and variant), a Parquet copy
    <out>.parquet, and <out>_summary.csv (one row per cell and variant).
    """

    def __init__(self, spec: ExperimentSpec) -> None:
        self.spec = spec
        self.out_path = Path(spec.out_path).with_suffix(".csv")
        self.out_path.parent.mkdir(parents=True, exist_ok=True)

    async def run(self) -> pd.DataFrame:
        """
        Run every trial and write the results.

        This is the only async entry point. Trials are dispatched to a
        process pool of spec.jobs workers; jobs=1 runs them in-process.

        Returns:
            The per-trial table, sorted.
        """
        spec = self.spec
        tasks = build_tasks(spec)
        logger.info(
            f"{spec.kind.value}: {len(tasks)} trials x {len(spec.variants)} variants, jobs={spec.jobs}"
        )

        if spec.jobs > 1:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                batches = await asyncio.gather(
                    *(loop.run_in_executor(pool, run_trial, task) for task in tasks)
                )
        else:
            batches = [run_trial(task) for task in tasks]

        df = self.process([row for batch in batches for row in batch])
        self._save(df)
        return df

    def process(self, rows: list[dict[str, Any]]) -> pd.DataFrame:
        """Sort trial rows into their canonical order."""
        df = pd.DataFrame(rows)
        if df.empty:
            return df
        keys = [self._column(axis) for axis in AXES[self.spec.kind] if self._column(axis) in df.columns]
        df = df.sort_values([*keys, "variant", "trial"], kind="mergesort").reset_index(drop=True)
        return df

    def summarize(self, df: pd.DataFrame) -> pd.DataFrame:
        """
        Per-cell aggregates.

        phase:     success_rate (mean of trial success flags), median iters
        runtime:   medians of total_time, mean_iter_time and iters
        stability: medians of rel_inf and rel_fro
        """
        kind = self.spec.kind
        keys = [self._column(axis) for axis in AXES[kind] if self._column(axis) in df.columns]
        grouped = df.groupby([*keys, "variant"], sort=True)
        if kind is ExperimentKind.PHASE:
            summary = grouped.agg(
                success_rate=("success", "mean"),
                trials=("trial", "count"),
                median_iters=("iters", "median"),
            )
        elif kind is ExperimentKind.RUNTIME:
            summary = grouped.agg(
                total_time=("total_time", "median"),
                mean_iter_time=("mean_iter_time", "median"),
                iters=("iters", "median"),
                trials=("trial", "count"),
            )
        else:
            summary = grouped.agg(
                rel_inf=("rel_inf", "median"),
                rel_fro=("rel_fro", "median"),
                trials=("trial", "count"),
            )
        return summary.reset_index()

    @staticmethod
    def _column(axis: str) -> str:
        return "snr_db" if axis == "snr" else axis

    def _save(self, df: pd.DataFrame) -> Path:
        """Persist the trial table as CSV and Parquet plus the cell summary."""
        df.to_csv(self.out_path, index=False)
        parquet_path = self.out_path.with_suffix(".parquet")
        try:
            df.to_parquet(parquet_path, index=False)
        except (ImportError, ValueError) as exc:
            raise OutputError(f"cannot write {parquet_path}: {exc}") from exc

        summary_path = self.out_path.with_name(self.out_path.stem + "_summary.csv")
        if not df.empty:
            summary = self.summarize(df)
            summary.to_csv(summary_path, index=False)
            for record in summary.to_dict("records"):
                logger.info(f"{self.spec.kind.value} cell: {record}")
        logger.info(f"Saved {len(df)} rows to {self.out_path} and {summary_path}")
        return self.out_path


def run_experiment(spec: ExperimentSpec) -> pd.DataFrame:
    """Synchronous convenience wrapper for CLI usage."""
    return asyncio.run(ExperimentRunner(spec).run())


def run_phase(spec: ExperimentSpec) -> pd.DataFrame:
    _require_kind(spec, ExperimentKind.PHASE)
    return run_experiment(spec)


def run_runtime(spec: ExperimentSpec) -> pd.DataFrame:
    _require_kind(spec, ExperimentKind.RUNTIME)
    return run_experiment(spec)


def run_stability(spec: ExperimentSpec) -> pd.DataFrame:
    _require_kind(spec, ExperimentKind.STABILITY)
    return run_experiment(spec)


def _require_kind(spec: ExperimentSpec, kind: ExperimentKind) -> None:
    if spec.kind is not kind:
        raise ConfigError(f"expected a {kind.value} spec, got {spec.kind.value}")


def load_input(path: Path, config: ArmcConfig) -> ObservationSet:
    """
    Observations from an ARMCM1 dense matrix (subsampled at io.p when set)
    or a COO text file (io.p overrides the header rate).
    """
    if is_matrix_file(path):
        matrix = read_matrix(path)
        return observe_dense(matrix, config.io.p, seed=config.solver.seed)
    return read_observations(path, p=config.io.p)


def run_solve(
    input_path: Path | str,
    config: ArmcConfig,
    out_dir: Path | str,
    truth_path: Path | str | None = None,
    outliers_path: Path | str | None = None,
) -> SolveOutputs:
    """
    Solve ingested data and write the decomposition.

    Writes <out>/factors.armcf (L as ARMCF1), <out>/sparse.coo (nonzeros of
    S as COO text) and <out>/trace.csv (one row per iteration). beta1
    defaults to the largest observed magnitude.

    Args:
        input_path: ARMCM1 matrix or COO text file.
        config: run configuration.
        out_dir: output directory.
        truth_path: optional ARMCF1 truth to evaluate against.
        outliers_path: optional outlier sidecar for support metrics.

    Raises:
        DataFormatError, DimensionMismatchError: bad input.
        RankCollapseError: solve failed; the trace so far is still written.
    """
    input_path, out_dir = Path(input_path), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    obs = load_input(input_path, config)
    logger.info(f"Loaded {obs.count} observations of a {obs.n}x{obs.n} matrix (p={obs.p:.4g})")

    truth = read_factors(truth_path) if truth_path is not None else None
    outliers = None
    outlier_vals = np.zeros(0)
    if outliers_path is not None:
        outliers, outlier_vals = read_outlier_positions(outliers_path, obs)

    cfg = dataclasses.replace(
        solver_config(config, config.solver.rank, beta1_from_data(obs)),
        track_truth=truth,
        track_outliers=outliers,
    )
    trace_path = out_dir / "trace.csv"
    try:
        result = solve(obs, cfg)
    except RankCollapseError as exc:
        if exc.partial_result is not None:
            write_trace(trace_path, exc.partial_result)
        raise

    factors_path = write_factors(out_dir / "factors.armcf", result.l_out)
    nz = result.s_out.nonzero_positions()
    sparse_path = write_coo(
        out_dir / "sparse.coo", obs.rows[nz], obs.cols[nz], result.s_out.vals[nz], obs.n, obs.p
    )
    write_trace(trace_path, result)

    report = None
    if truth is not None:
        instance = ProblemInstance(
            truth=truth,
            outlier_positions=outliers if outliers is not None else np.zeros(0, dtype=np.int64),
            outlier_values=outlier_vals,
            sigma_noise=0.0,
            obs=obs,
            params=ProblemParams(
                n=obs.n,
                r=truth.r,
                kappa=float(truth.sigma[0] / truth.sigma[-1]),
                p=obs.p,
                alpha=0.0,
                sigma=0.0,
                seed=config.solver.seed,
            ),
            truth_linf=max_abs_entry(truth),
        )
        report = evaluate(result, instance, config.metrics)

    for line in describe_solve(result, report):
        logger.info(line)
    return SolveOutputs(factors_path, sparse_path, trace_path, result, report)


def write_trace(path: Path, result: SolveResult) -> Path:
    """Per-iteration trace as CSV (xi, rel_change, timings, tracked errors)."""
    df = pd.DataFrame([dataclasses.asdict(rec) for rec in result.trace])
    if df.empty:
        df = pd.DataFrame(columns=[f.name for f in dataclasses.fields(IterationRecord)])
    df.to_csv(path, index=False)
    return path


def run_generate(config: ArmcConfig, stem: Path | str, seed: int | None = None) -> ProblemInstance:
    """
    Draw one synthetic instance and serialize it under stem.

    Uses experiment.n, r, kappa, p and alpha, with noise level synth.sigma.
    """
    ex = config.experiment
    seed = ex.seed if seed is None else seed
    truth = generate_truth(ex.n, ex.r, ex.kappa, seed)
    instance = sample_instance(
        truth, ex.p, ex.alpha, config.synth.sigma, seed, settings=config.synth, kappa=ex.kappa
    )
    write_instance(stem, instance)
    return instance


def instance_summary(instance: ProblemInstance) -> dict[str, Any]:
    params = dataclasses.asdict(instance.params)
    params.update(
        observed=instance.obs.count,
        outliers=int(instance.outlier_positions.size),
        truth_linf=instance.truth_linf,
    )
    return params


def to_json(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, default=str)
