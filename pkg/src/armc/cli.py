"""
ARMC - Command-Line Harness

Subcommands:
    generate    draw one synthetic instance and serialize it
    solve       decompose an ARMCM1 matrix or COO observation file
    phase       success-rate sweep over (p, alpha, kappa)
    runtime     timing sweep over n at fixed oversampling
    stability   error sweep over SNR, alpha and r

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure (rank collapse).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from armc.config import ArmcConfig, apply_overrides, load_config
from armc.errors import ArmcError, RankCollapseError
from armc.explain.summary import describe_solve
from armc.pipeline.experiments import (
    build_spec,
    instance_summary,
    run_experiment,
    run_generate,
    run_solve,
    to_json,
)
from armc.types import ExperimentKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_SWEEPS = ("phase", "runtime", "stability")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", type=Path, default=None, help="key=value config file")
    common.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    common.add_argument("--jobs", "-j", type=int, default=None, help="concurrent trials")
    common.add_argument("--paper-scale", action="store_true", help="full-size experiment grids")
    common.add_argument("--alpha-sweep", action="store_true", help="phase grid over alpha at p=0.2, kappa=2")
    common.add_argument("--out", "-o", type=Path, default=None, help="output path")
    common.add_argument("--variant", choices=("armc", "rmc", "rrmc"), default=None)
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key, e.g. threshold.gamma=0.8 (repeatable)",
    )
    common.add_argument("--json", action="store_true", help="print JSON only")
    common.add_argument("--verbose", "-v", action="store_true", help="verbose logging")

    parser = argparse.ArgumentParser(
        prog="armc-bench",
        description="Robust matrix completion solvers and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="serialize a synthetic instance")

    solve_p = sub.add_parser("solve", parents=[common], help="solve an ingested matrix")
    solve_p.add_argument("input", type=Path, help="ARMCM1 matrix or COO observation file")
    solve_p.add_argument("--truth", type=Path, default=None, help="ARMCF1 truth factors to evaluate against")
    solve_p.add_argument("--outliers", type=Path, default=None, help="outlier sidecar (COO)")
    solve_p.add_argument("--rank", "-r", type=int, default=None)
    solve_p.add_argument("--p", type=float, default=None, help="subsampling / rescaling rate")

    for name in _SWEEPS:
        sub.add_parser(name, parents=[common], help=f"{name} experiment")
    return parser


def resolve_config(args: argparse.Namespace) -> ArmcConfig:
    """Defaults, then the config file, then --paper-scale and --alpha-sweep, then flags."""
    config = load_config(args.config)
    if args.paper_scale:
        config = dataclasses.replace(config, experiment=config.experiment.paper_scale())
    if args.alpha_sweep:
        config = dataclasses.replace(config, experiment=config.experiment.alpha_sweep())

    overrides: dict[str, str] = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    if args.seed is not None:
        overrides["experiment.seed"] = str(args.seed)
        overrides["solver.seed"] = str(args.seed)
    if args.jobs is not None:
        overrides["experiment.jobs"] = str(args.jobs)
    if args.variant is not None:
        overrides["solver.variant"] = args.variant
        overrides["experiment.variants"] = args.variant
    if getattr(args, "rank", None) is not None:
        overrides["solver.rank"] = str(args.rank)
    if getattr(args, "p", None) is not None:
        overrides["io.p"] = str(args.p)
    return apply_overrides(config, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    try:
        config = resolve_config(args)
        return _dispatch(args, config)
    except argparse.ArgumentTypeError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RankCollapseError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        if exc.partial_result is not None:
            print(f"Partial trace: {exc.partial_result.iters} iterations", file=sys.stderr)
        return EXIT_NUMERICAL
    except ArmcError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ImportError, ValueError) as exc:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"Error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def _dispatch(args: argparse.Namespace, config: ArmcConfig) -> int:
    out_root = Path(config.io.out)

    if args.command == "generate":
        stem = args.out or out_root / "instance"
        instance = run_generate(config, stem)
        summary = instance_summary(instance)
        if args.json:
            print(to_json(summary))
        else:
            _banner("ARMC INSTANCE", [f"{k}: {v}" for k, v in summary.items()] + [f"Stem: {stem}"])
        return EXIT_OK

    if args.command == "solve":
        outputs = run_solve(args.input, config, args.out or out_root / "solve", args.truth, args.outliers)
        if args.json:
            print(json.dumps(outputs.to_dict(), indent=2))
        else:
            lines = describe_solve(outputs.result, outputs.report)
            lines += [f"Factors: {outputs.factors}", f"Sparse:  {outputs.sparse}", f"Trace:   {outputs.trace}"]
            _banner("ARMC SOLVE", lines)
        return EXIT_OK

    kind = ExperimentKind(args.command)
    spec = build_spec(kind, config, args.out or out_root / kind.value)
    df = run_experiment(spec)
    if args.json:
        print(df.to_json(orient="records", indent=2))
    else:
        _banner(f"ARMC {kind.value.upper()}", [f"Rows: {len(df)}", f"Table: {Path(spec.out_path).with_suffix('.csv')}"])
    return EXIT_OK


def _banner(title: str, lines: list[str]) -> None:
    print()
    print("=" * 60)
    print(title)
    print("=" * 60)
    for line in lines:
        print(f"  {line}")
    print("=" * 60)


if __name__ == "__main__":
    sys.exit(main())
