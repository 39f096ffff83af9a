"""Shared fixtures for ARMC tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure armc is importable
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from armc.config import ArmcConfig
from armc.synthgen.generator import generate_truth, sample_instance
from armc.types import LowRankFactors, ProblemInstance, ThresholdKind, ThresholdRule
from tests.oracles import random_factors


@pytest.fixture
def config() -> ArmcConfig:
    return ArmcConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_factors() -> LowRankFactors:
    """n=40, r=2."""
    return random_factors(40, 2, seed=6)


@pytest.fixture
def small_instance() -> ProblemInstance:
    """Noiseless n=60, r=3, kappa=2 instance at p=0.5 with 5% outliers."""
    truth = generate_truth(60, 3, 2.0, seed=2)
    return sample_instance(truth, 0.5, 0.05, 0.0, seed=2)


@pytest.fixture
def clean_instance() -> ProblemInstance:
    """n=60, r=3 at p=0.5 with no outliers or noise."""
    truth = generate_truth(60, 3, 2.0, seed=2)
    return sample_instance(truth, 0.5, 0.0, 0.0, seed=2)


@pytest.fixture
def soft_rule() -> ThresholdRule:
    return ThresholdRule(kind=ThresholdKind.SOFT, beta1=1.0, beta2=0.0, gamma=0.9)
