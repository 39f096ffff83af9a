"""Tests for run summaries."""

import numpy as np

from armc.explain.summary import describe_solve
from armc.types import EvalReport, IterationRecord, SolveResult, SolverVariant, SparseValues
from tests.oracles import random_factors


def _result(trace, stop_reason="rel_change") -> SolveResult:
    return SolveResult(
        l_out=random_factors(10, 2, seed=0),
        s_out=SparseValues(np.array([0.0, 1.5, 0.0, -2.0])),
        iters=len(trace),
        converged=stop_reason != "max_iters",
        trace=trace,
        variant=SolverVariant.ARMC,
        stop_reason=stop_reason,
        total_time=1.25,
    )


class TestDescribeSolve:
    def test_basic_lines(self):
        trace = [IterationRecord(iteration=1, xi=0.5, wall_time=0.1, rel_change=1e-8, support_size=2)]
        lines = describe_solve(_result(trace))
        assert lines[0].startswith("ARMC: n=10, r=2, 1 iterations")
        assert "relative change fell below tolerance" in lines[1]
        assert any("Final threshold" in line for line in lines)
        assert lines[-1] == "Outliers detected: 2 of 4 observed entries"

    def test_tracked_error_line(self):
        trace = [
            IterationRecord(
                iteration=1, xi=0.5, wall_time=0.1, rel_change=0.1, support_size=2, rel_inf_error=2e-4
            )
        ]
        result = _result(trace, "truth_tol")
        lines = describe_solve(result)
        assert any(line.startswith("Tracked entrywise error") for line in lines)

    def test_report_lines(self):
        report = EvalReport(
            rel_inf_error=5e-4,
            rel_fro_error=1e-4,
            success=True,
            support_precision=1.0,
            support_recall=0.5,
            contained=True,
        )
        lines = describe_solve(_result([], "max_iters"), report)
        assert "iteration cap" in lines[1]
        assert any(line.startswith("Truth: recovered") for line in lines)
        assert lines[-1] == "Outlier support: precision 1.000, recall 0.500"

    def test_spurious_detections_flagged(self):
        report = EvalReport(0.1, 0.1, False, 0.5, 1.0, False)
        lines = describe_solve(_result([]), report)
        assert any("not recovered" in line for line in lines)
        assert lines[-1].endswith("spurious detections present")
