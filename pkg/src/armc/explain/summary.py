"""
ARMC - Run Summary

Factual lines describing a finished solve: variant, stopping reason,
final threshold and change, detected outliers, and recovery quality
when a truth is known. No interpretation beyond the success criterion.
"""

from __future__ import annotations

from armc.types import EvalReport, SolveResult

_STOP_REASONS = {
    "rel_change": "relative change fell below tolerance",
    "truth_tol": "error against truth reached tolerance",
    "max_iters": "iteration cap reached without convergence",
    "rank_collapse": "rank collapsed during truncation",
}


def describe_solve(result: SolveResult, report: EvalReport | None = None) -> list[str]:
    """
    Summary lines for a solve.

    Args:
        result: finished (or partial) solve.
        report: evaluation against a known truth, if any.

    Returns:
        list of one-line statements.
    """
    lines = [
        f"{result.variant.value.upper()}: n={result.l_out.n}, r={result.l_out.r}, "
        f"{result.iters} iterations in {result.total_time:.2f}s (init {result.init_time:.2f}s)",
        f"Stopped: {_STOP_REASONS.get(result.stop_reason, result.stop_reason)}",
    ]

    if result.trace:
        last = result.trace[-1]
        lines.append(f"Final threshold xi = {last.xi:.3e}, relative change = {last.rel_change:.3e}")
        if last.rel_inf_error is not None:
            mode = f" ({result.truth_error_mode})" if result.truth_error_mode else ""
            lines.append(f"Tracked entrywise error{mode}: {last.rel_inf_error:.3e}")

    lines.append(f"Outliers detected: {result.s_out.nonzero_positions().size} of {result.s_out.count} observed entries")

    if report is not None:
        verdict = "recovered" if report.success else "not recovered"
        lines.append(
            f"Truth: {verdict}, rel inf error {report.rel_inf_error:.3e} ({report.inf_mode}), "
            f"rel fro error {report.rel_fro_error:.3e}"
        )
        lines.append(
            f"Outlier support: precision {report.support_precision:.3f}, "
            f"recall {report.support_recall:.3f}"
            + ("" if report.contained else ", spurious detections present")
        )
    return lines
