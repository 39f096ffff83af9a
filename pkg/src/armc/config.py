"""
ARMC - Configuration & Defaults

Single source of truth for all numerical constants and experiment grids.
All values are named, documented, and centralized.

A run can override any field through a flat ``key=value`` file
(``section.field=value``, e.g. ``threshold.gamma=0.8``) parsed with
python-dotenv; command-line flags are applied on top of the file.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import types
import typing
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from armc.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "ARMC_CONFIG"


@dataclass(frozen=True)
class LinalgSettings:
    """Kernel constants for the dense, structured and implicit-operator decompositions."""

    oversample: int = 10  # Extra Lanczos vectors for the truncated SVD of implicit operators
    svd_tol: float = 0.0  # Relative accuracy of truncated singular values; 0 is machine precision
    collapse_tol: float = 1e-14  # sigma_r <= tol * sigma_1 is a rank collapse
    qr_deficiency_tol: float = 1e-12  # |R_jj| <= tol * max|R_ii| flags a dependent column
    jacobi_max_sweeps: int = 60
    kernel_chunk: int = 262_144  # Triplets per chunk when evaluating factors on the support


@dataclass(frozen=True)
class ThresholdSettings:
    """Outlier thresholding operator and schedule."""

    kind: str = "soft"  # hard | soft | scad
    scad_a: float = 3.7  # Standard SCAD shape
    gamma: float = 0.9  # Geometric decay of the threshold
    beta1: float | None = None  # None -> 1.1 * mu * r * sigma_1 / n (synthetic) or max|M| (data)
    beta2: float | None = None  # None -> 0 when noiseless, noise-floor rule otherwise
    beta_scale: float = 1.1
    c_noise: float = 1.0  # Calibration for the sqrt(log n) noise bound


@dataclass(frozen=True)
class SolverSettings:
    """Iteration control."""

    rank: int = 5
    variant: str = "armc"  # armc | rmc | rrmc
    max_iters: int = 500
    tol_rel_change: float = 1e-7
    truth_tol: float | None = None  # Stop once ||L - L*||_inf / ||L*||_inf <= truth_tol
    seed: int = 0


@dataclass(frozen=True)
class SynthSettings:
    """Synthetic instance generation."""

    enforce_outlier_cap: bool = True  # Resample when a row/column exceeds 2 * alpha * p * n outliers
    max_resample: int = 5
    sigma: float = 0.0  # Gaussian noise level for `generate`


@dataclass(frozen=True)
class MetricsSettings:
    """Evaluation constants."""

    success_tol: float = 1e-3  # Relative entrywise error counted as recovery
    exact_inf_max_n: int = 2000  # Above this n the entrywise error uses a probe set
    probe_size: int = 1_000_000
    probe_seed: int = 0


@dataclass(frozen=True)
class ExperimentSettings:
    """Experiment grids. Defaults are desk scale; see ``paper_scale``."""

    n: int = 500
    r: int = 5
    kappa: float = 2.0
    p: float = 0.2
    alpha: float = 0.1
    trials: int = 25
    seed: int = 20240601
    jobs: int = 1
    variants: tuple[str, ...] = ("armc", "rmc")
    max_iters: int = 300
    truth_tol: float = 1e-3
    p_list: tuple[float, ...] = (0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2, 0.22, 0.24, 0.26)
    alpha_list: tuple[float, ...] = (0.15,)
    kappa_list: tuple[float, ...] = (1.0, 5.0)
    n_list: tuple[int, ...] = (2000, 4000, 8000)
    r_list: tuple[int, ...] = (5,)
    snr_list: tuple[float, ...] = (20.0, 30.0, 40.0, 50.0, 60.0)
    runtime_r: int = 10  # p = 40 r / n keeps the oversampling ratio fixed across n
    runtime_alpha_list: tuple[float, ...] = (0.1, 0.2)
    runtime_trials: int = 5
    stability_p: float = 0.3
    stability_alpha_list: tuple[float, ...] = (0.1, 0.2)

    def paper_scale(self) -> ExperimentSettings:
        """Full grid sizes of the published experiments."""
        return dataclasses.replace(
            self,
            n=1000,
            n_list=(2000, 4000, 8000, 16000),
            r_list=(5, 10),
            runtime_trials=self.trials,
        )

    def alpha_sweep(self) -> ExperimentSettings:
        """Outlier-fraction phase grid: alpha from 0.2 to 0.55 in steps of 0.01 at p=0.2, kappa=2."""
        return dataclasses.replace(
            self,
            p_list=(0.2,),
            kappa_list=(2.0,),
            alpha_list=tuple(round(0.2 + 0.01 * i, 2) for i in range(36)),
        )


@dataclass(frozen=True)
class IoSettings:
    """Input/output locations."""

    out: str = "data/output"
    p: float | None = None  # Subsampling rate for dense matrix ingestion (None -> keep all)


@dataclass(frozen=True)
class ArmcConfig:
    """Master configuration for ARMC."""

    linalg: LinalgSettings = field(default_factory=LinalgSettings)
    threshold: ThresholdSettings = field(default_factory=ThresholdSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    synth: SynthSettings = field(default_factory=SynthSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    io: IoSettings = field(default_factory=IoSettings)


def load_config(
    path: Path | str | None = None,
    overrides: Mapping[str, str] | None = None,
) -> ArmcConfig:
    """
    Build a configuration from defaults, an optional key=value file, and overrides.

    Precedence (lowest to highest): dataclass defaults, the file named by
    ``path`` (or ``$ARMC_CONFIG`` when ``path`` is None), then ``overrides``.

    Args:
        path: Flat config file with ``section.field=value`` lines.
        overrides: Extra ``section.field -> value`` strings (CLI flags).

    Returns:
        ArmcConfig.

    Raises:
        ConfigError: unknown key, unreadable file, or uncoercible value.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None

    values: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        parsed = dotenv_values(path)
        values.update({k: v for k, v in parsed.items() if v is not None})
        logger.debug(f"Loaded {len(values)} config keys from {path}")
    if overrides:
        values.update(overrides)

    return apply_overrides(ArmcConfig(), values)


def apply_overrides(config: ArmcConfig, overrides: Mapping[str, str]) -> ArmcConfig:
    """Copy of config with each dotted ``section.field`` key replaced."""
    for key, raw in overrides.items():
        config = _apply_key(config, key, raw)
    return config


def _apply_key(config: ArmcConfig, key: str, raw: str) -> ArmcConfig:
    """Return a copy of config with one dotted key replaced."""
    section_name, _, field_name = key.partition(".")
    sections = {f.name for f in dataclasses.fields(ArmcConfig)}
    if section_name not in sections or not field_name:
        raise ConfigError(f"Unknown config key: {key}")

    section = getattr(config, section_name)
    hints = typing.get_type_hints(type(section))
    if field_name not in hints:
        raise ConfigError(f"Unknown config key: {key}")

    try:
        value = _coerce(raw, hints[field_name])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Bad value for {key}: {raw!r} ({exc})") from exc

    section = dataclasses.replace(section, **{field_name: value})
    return dataclasses.replace(config, **{section_name: section})


def _coerce(raw: str, hint: Any) -> Any:
    """Convert a config string to the annotated field type."""
    text = raw.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin in (typing.Union, types.UnionType):
        if text.lower() in ("", "none", "null"):
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(text, inner[0])
    if origin is tuple:
        item_type = args[0] if args else str
        return tuple(_coerce(part, item_type) for part in text.split(",") if part.strip())
    if hint is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text
