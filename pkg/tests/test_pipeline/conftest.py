"""Tiny experiment grids for pipeline tests."""

import pytest

from armc.config import ArmcConfig, apply_overrides

TINY = {
    "experiment.n": "40",
    "experiment.r": "2",
    "experiment.trials": "2",
    "experiment.seed": "7",
    "experiment.variants": "armc",
    "experiment.max_iters": "60",
    "experiment.p_list": "1.0",
    "experiment.alpha_list": "0.0",
    "experiment.kappa_list": "1.0",
    "experiment.n_list": "40",
    "experiment.runtime_r": "2",
    "experiment.runtime_alpha_list": "0.05",
    "experiment.runtime_trials": "1",
    "experiment.snr_list": "40.0",
    "experiment.stability_alpha_list": "0.05",
    "experiment.stability_p": "0.8",
    "experiment.r_list": "2",
}


@pytest.fixture
def tiny_config() -> ArmcConfig:
    return apply_overrides(ArmcConfig(), TINY)
