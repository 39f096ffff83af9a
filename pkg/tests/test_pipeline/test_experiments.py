"""Tests for experiment orchestration and the solve / generate paths."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from armc.config import apply_overrides
from armc.errors import ConfigError, OutputError, RankCollapseError
from armc.ingest.formats import instance_paths, read_coo, read_factors, write_matrix
from armc.linalg.factors import densify
from armc.pipeline import experiments
from armc.pipeline.experiments import (
    ExperimentRunner,
    build_spec,
    instance_summary,
    load_input,
    parse_variant,
    run_generate,
    run_phase,
    run_solve,
)
from armc.types import ExperimentKind, SolverVariant
from tests.oracles import random_factors


class TestBuildSpec:
    def test_phase_grids(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.PHASE, tiny_config, tmp_path / "phase")
        assert spec.grids["p"] == (1.0,)
        assert spec.grids["n"] == (40,)
        assert spec.variants == (SolverVariant.ARMC,)
        assert spec.base.truth_tol == tiny_config.experiment.truth_tol

    def test_stability_has_no_truth_stop(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.STABILITY, tiny_config, tmp_path / "stab")
        assert spec.base.truth_tol is None

    def test_runtime_trials(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.RUNTIME, tiny_config, tmp_path / "rt")
        assert spec.trials == tiny_config.experiment.runtime_trials

    def test_not_a_sweep(self, tiny_config, tmp_path):
        with pytest.raises(ConfigError):
            build_spec(ExperimentKind.SOLVE, tiny_config, tmp_path / "x")

    def test_unknown_variant(self):
        assert parse_variant("RRMC") is SolverVariant.RRMC
        with pytest.raises(ConfigError):
            parse_variant("admm")

    def test_wrong_kind_rejected(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.RUNTIME, tiny_config, tmp_path / "rt")
        with pytest.raises(ConfigError):
            run_phase(spec)


class TestExperimentRunner:
    async def test_phase_writes_tables(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.PHASE, tiny_config, tmp_path / "phase")
        df = await ExperimentRunner(spec).run()

        assert len(df) == spec.trials
        assert (tmp_path / "phase.csv").is_file()
        assert (tmp_path / "phase.parquet").is_file()
        summary = pd.read_csv(tmp_path / "phase_summary.csv")
        assert summary["success_rate"].tolist() == [1.0]
        assert summary["trials"].tolist() == [spec.trials]

        saved = pd.read_parquet(tmp_path / "phase.parquet")
        assert saved["seed"].tolist() == df["seed"].tolist()

    def test_success_rate_is_mean(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.PHASE, tiny_config, tmp_path / "phase")
        runner = ExperimentRunner(spec)
        rows = [
            {"p": 0.1, "alpha": 0.1, "kappa": 1.0, "n": 40, "r": 2, "variant": "armc", "trial": t,
             "success": t < 3, "iters": 10}
            for t in range(4)
        ]
        summary = runner.summarize(runner.process(rows))
        assert summary["success_rate"].tolist() == [0.75]
        assert summary["median_iters"].tolist() == [10]

    def test_rows_sorted_by_axes(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.PHASE, tiny_config, tmp_path / "phase")
        rows = [
            {"p": p, "alpha": 0.1, "kappa": k, "n": 40, "r": 2, "variant": v, "trial": t}
            for t in (1, 0)
            for v in ("rmc", "armc")
            for k in (5.0, 1.0)
            for p in (0.2, 0.1)
        ]
        df = ExperimentRunner(spec).process(rows)
        keys = list(zip(df["p"], df["kappa"], df["variant"], df["trial"], strict=True))
        assert keys == sorted(keys)

    async def test_runtime_summary(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.RUNTIME, tiny_config, tmp_path / "rt")
        df = await ExperimentRunner(spec).run()
        assert set(df.columns) >= {"n", "alpha", "p", "total_time", "mean_iter_time"}
        summary = pd.read_csv(tmp_path / "rt_summary.csv")
        assert (summary["total_time"] > 0).all()

    async def test_stability_table(self, tiny_config, tmp_path):
        spec = build_spec(ExperimentKind.STABILITY, tiny_config, tmp_path / "stab")
        df = await ExperimentRunner(spec).run()
        assert df["snr_db"].tolist() == [40.0] * spec.trials
        assert np.isfinite(df["rel_inf"]).all()

    async def test_parquet_failure_is_output_error(self, tiny_config, tmp_path, monkeypatch):
        def no_engine(self, *args, **kwargs):
            raise ImportError("Unable to find a usable engine")

        monkeypatch.setattr(pd.DataFrame, "to_parquet", no_engine)
        spec = build_spec(ExperimentKind.PHASE, tiny_config, tmp_path / "phase")
        with pytest.raises(OutputError, match="phase.parquet"):
            await ExperimentRunner(spec).run()
        assert (tmp_path / "phase.csv").is_file()

    @pytest.mark.integration
    async def test_process_pool_matches_sequential(self, tiny_config, tmp_path):
        config = apply_overrides(tiny_config, {"experiment.p_list": "0.8,1.0"})
        seq = await ExperimentRunner(build_spec(ExperimentKind.PHASE, config, tmp_path / "a")).run()
        pooled_config = apply_overrides(config, {"experiment.jobs": "2"})
        pooled = await ExperimentRunner(build_spec(ExperimentKind.PHASE, pooled_config, tmp_path / "b")).run()
        pd.testing.assert_frame_equal(seq, pooled)


class TestGenerateAndSolve:
    @pytest.fixture
    def solve_config(self, config):
        return apply_overrides(
            config,
            {
                "experiment.n": "200",
                "experiment.r": "2",
                "experiment.p": "0.5",
                "experiment.alpha": "0.05",
                "experiment.seed": "3",
                "solver.rank": "2",
            },
        )

    def test_generate_writes_instance(self, solve_config, tmp_path):
        instance = run_generate(solve_config, tmp_path / "inst")
        assert all(p.is_file() for p in instance_paths(tmp_path / "inst"))
        summary = instance_summary(instance)
        assert summary["n"] == 200
        assert summary["observed"] == instance.obs.count
        assert summary["outliers"] == instance.outlier_positions.size

    def test_generate_seed_override(self, solve_config, tmp_path):
        a = run_generate(solve_config, tmp_path / "a", seed=1)
        b = run_generate(solve_config, tmp_path / "b", seed=2)
        assert a.obs.count != b.obs.count or not np.array_equal(a.obs.vals, b.obs.vals)

    def test_solve_generated_instance(self, solve_config, tmp_path):
        instance = run_generate(solve_config, tmp_path / "inst")
        paths = instance_paths(tmp_path / "inst")
        outputs = run_solve(paths.observations, solve_config, tmp_path / "out", paths.truth, paths.outliers)

        assert read_factors(outputs.factors).r == 2
        rows, cols, vals, n, p = read_coo(outputs.sparse)
        assert n == 200
        assert p == instance.obs.p
        assert np.all(vals != 0)
        trace = pd.read_csv(outputs.trace)
        assert len(trace) == outputs.result.iters
        assert outputs.report is not None
        assert outputs.report.rel_inf_error < 1e-2
        assert outputs.to_dict()["report"]["success"] == outputs.report.success

    def test_solve_dense_matrix(self, config, tmp_path):
        truth = random_factors(30, 2, seed=4)
        path = write_matrix(tmp_path / "m.armcm", densify(truth))
        config = apply_overrides(config, {"solver.rank": "2"})
        obs = load_input(path, config)
        assert obs.count == 900 and obs.p == 1.0
        outputs = run_solve(path, config, tmp_path / "out")
        assert outputs.report is None
        assert outputs.result.converged

    def test_dense_subsampling(self, config, tmp_path):
        path = write_matrix(tmp_path / "m.armcm", np.ones((30, 30)))
        obs = load_input(path, apply_overrides(config, {"io.p": "0.5"}))
        assert obs.p == 0.5
        assert 0 < obs.count < 900

    def test_collapse_still_writes_trace(self, config, tmp_path, monkeypatch):
        truth = random_factors(30, 2, seed=4)
        path = write_matrix(tmp_path / "m.armcm", densify(truth))
        real_solve = experiments.solve

        def collapsing(obs, cfg):
            partial = real_solve(obs, cfg)
            raise RankCollapseError("collapsed", partial_result=partial)

        monkeypatch.setattr(experiments, "solve", collapsing)
        with pytest.raises(RankCollapseError):
            run_solve(path, apply_overrides(config, {"solver.rank": "2"}), tmp_path / "out")
        assert (tmp_path / "out" / "trace.csv").is_file()
        assert not (tmp_path / "out" / "factors.armcf").exists()


@pytest.mark.slow
class TestDeskScaleExperiments:
    """Full desk-scale grids; run with -m slow."""

    def test_phase_transition_edges(self, config, tmp_path):
        config = apply_overrides(
            config,
            {
                "experiment.n": "500",
                "experiment.kappa_list": "5",
                "experiment.alpha_list": "0.15",
                "experiment.variants": "armc",
                "experiment.trials": "10",
                "experiment.jobs": "4",
            },
        )
        df = run_phase(build_spec(ExperimentKind.PHASE, config, tmp_path / "phase"))
        rates = df.groupby("p")["success"].mean().sort_index()
        assert len(rates) == 13
        assert rates.loc[0.02] == 0.0
        assert rates.loc[0.26] >= 0.9
        smoothed = rates.rolling(3, center=True, min_periods=1).median()
        assert smoothed.is_monotonic_increasing

    def test_runtime_armc_faster_than_rmc(self, config, tmp_path):
        config = apply_overrides(
            config,
            {
                "experiment.n_list": "2000",
                "experiment.runtime_r": "10",
                "experiment.runtime_alpha_list": "0.1",
                "experiment.runtime_trials": "5",
                "experiment.variants": "armc,rmc",
            },
        )
        df = experiments.run_runtime(build_spec(ExperimentKind.RUNTIME, config, tmp_path / "rt"))
        assert df["p"].unique().tolist() == [pytest.approx(0.2)]
        medians = df.groupby("variant")[["total_time", "iters"]].median()
        assert medians.loc["armc", "total_time"] < medians.loc["rmc", "total_time"]
        iters_gap = abs(medians.loc["armc", "iters"] - medians.loc["rmc", "iters"])
        assert iters_gap <= 0.1 * medians.loc["rmc", "iters"]

    def test_runtime_per_iteration_scaling(self, config, tmp_path):
        config = apply_overrides(
            config,
            {
                "experiment.n_list": "2000,8000",
                "experiment.runtime_r": "10",
                "experiment.runtime_alpha_list": "0.1",
                "experiment.runtime_trials": "3",
                "experiment.variants": "armc",
            },
        )
        df = experiments.run_runtime(build_spec(ExperimentKind.RUNTIME, config, tmp_path / "rt"))
        per_iter = df.groupby("n")["mean_iter_time"].median()
        assert per_iter.loc[8000] <= 6.0 * per_iter.loc[2000]

    def test_stability_error_tracks_noise_and_outliers(self, config, tmp_path):
        snrs = (20.0, 30.0, 40.0, 50.0, 60.0)
        config = apply_overrides(
            config,
            {
                "experiment.n": "1000",
                "experiment.r_list": "5",
                "experiment.stability_p": "0.3",
                "experiment.stability_alpha_list": "0.1,0.2",
                "experiment.snr_list": ",".join(str(s) for s in snrs),
                "experiment.trials": "5",
                "experiment.variants": "armc",
            },
        )
        df = experiments.run_stability(build_spec(ExperimentKind.STABILITY, config, tmp_path / "stab"))
        medians = df.groupby(["alpha", "snr_db"])["rel_fro"].median()
        for alpha in (0.1, 0.2):
            fit = stats.linregress(snrs, np.log10([medians.loc[(alpha, snr)] for snr in snrs]))
            assert -0.055 <= fit.slope <= -0.045
            assert fit.rvalue**2 >= 0.95
        for snr in snrs:
            assert medians.loc[(0.2, snr)] > medians.loc[(0.1, snr)]
