"""Tests for synthetic instance generation."""

import logging

import numpy as np
import pytest

from armc.config import SynthSettings
from armc.errors import ConfigError, EmptyObservationError
from armc.linalg.factors import densify, max_abs_entry, validate_factors
from armc.metrics.evaluation import incoherence
from armc.observations.kernels import eval_on_support
from armc.synthgen.generator import generate_truth, sample_instance


class TestGenerateTruth:
    def test_unit_condition_number(self):
        truth = generate_truth(50, 4, 1.0, seed=0)
        np.testing.assert_array_equal(truth.sigma, np.ones(4))

    def test_condition_number_exact(self):
        for seed in range(5):
            truth = generate_truth(400, 5, 5.0, seed=seed)
            assert truth.sigma[0] == 1.0
            assert truth.sigma[0] / truth.sigma[-1] == pytest.approx(5.0, rel=1e-15)
            assert np.all(np.diff(truth.sigma) <= 0)

    def test_incoherent(self):
        truth = generate_truth(400, 5, 5.0, seed=1)
        assert max(incoherence(truth)) <= 2.0

    def test_orthonormal_factors(self):
        validate_factors(generate_truth(100, 3, 2.0, seed=2))

    def test_rank_one(self):
        truth = generate_truth(30, 1, 4.0, seed=3)
        assert truth.sigma.tolist() == [1.0]

    def test_reproducible(self):
        a = generate_truth(80, 3, 2.0, seed=4)
        b = generate_truth(80, 3, 2.0, seed=4)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.sigma, b.sigma)

    def test_linf_bounded_by_incoherence(self):
        truth = generate_truth(200, 4, 3.0, seed=5)
        mu = max(incoherence(truth))
        assert max_abs_entry(truth) <= mu * truth.r * truth.sigma[0] / truth.n + 1e-15

    @pytest.mark.parametrize("n,r,kappa", [(10, 11, 2.0), (10, 0, 2.0), (10, 2, 0.5)])
    def test_invalid_parameters(self, n, r, kappa):
        with pytest.raises(ConfigError):
            generate_truth(n, r, kappa, seed=0)


class TestSampleInstance:
    def test_clean_full_observation(self):
        truth = generate_truth(30, 2, 2.0, seed=0)
        instance = sample_instance(truth, 1.0, 0.0, 0.0, seed=0)
        assert instance.obs.count == 900
        np.testing.assert_allclose(instance.obs.vals, densify(truth).ravel(), atol=1e-15)
        assert instance.outlier_positions.size == 0

    def test_clean_values_match_support_evaluation(self, clean_instance):
        expected = eval_on_support(clean_instance.truth, clean_instance.obs).vals
        np.testing.assert_array_equal(clean_instance.obs.vals, expected)

    def test_composition(self, small_instance):
        fitted = eval_on_support(small_instance.truth, small_instance.obs).vals
        composed = fitted.copy()
        composed[small_instance.outlier_positions] += small_instance.outlier_values
        np.testing.assert_array_equal(small_instance.obs.vals, composed)

    def test_outlier_magnitudes(self, small_instance):
        assert np.all(np.abs(small_instance.outlier_values) <= small_instance.truth_linf)

    def test_outlier_count_and_cap(self):
        truth = generate_truth(1000, 5, 2.0, seed=12)
        instance = sample_instance(truth, 0.1, 0.15, 0.0, seed=12)
        m = instance.obs.count
        count = instance.outlier_positions.size
        assert abs(count - 0.15 * m) <= 4 * np.sqrt(m * 0.15 * 0.85)
        cap = 2 * 0.15 * 0.1 * 1000
        rows = instance.obs.rows[instance.outlier_positions]
        cols = instance.obs.cols[instance.outlier_positions]
        assert np.bincount(rows).max() <= cap
        assert np.bincount(cols).max() <= cap
        assert instance.params.cap_satisfied

    def test_observed_fraction(self):
        truth = generate_truth(300, 3, 2.0, seed=7)
        instance = sample_instance(truth, 0.25, 0.0, 0.0, seed=7)
        total = 300**2
        assert abs(instance.obs.count - 0.25 * total) <= 5 * np.sqrt(total * 0.25 * 0.75)
        assert instance.obs.p == 0.25

    def test_noise_level(self):
        truth = generate_truth(200, 2, 2.0, seed=8)
        instance = sample_instance(truth, 0.5, 0.0, 0.01, seed=8)
        noise = instance.obs.vals - eval_on_support(truth, instance.obs).vals
        assert np.std(noise) == pytest.approx(0.01, rel=0.05)

    def test_reproducible(self):
        truth = generate_truth(60, 2, 2.0, seed=9)
        a = sample_instance(truth, 0.4, 0.1, 0.001, seed=9)
        b = sample_instance(truth, 0.4, 0.1, 0.001, seed=9)
        np.testing.assert_array_equal(a.obs.vals, b.obs.vals)
        np.testing.assert_array_equal(a.outlier_positions, b.outlier_positions)

    def test_cap_violation_kept_with_flag(self, caplog):
        truth = generate_truth(20, 1, 1.0, seed=0)
        settings = SynthSettings(enforce_outlier_cap=True, max_resample=1)
        with caplog.at_level(logging.WARNING):
            instance = sample_instance(truth, 1.0, 0.02, 0.0, seed=0, settings=settings)
        assert not instance.params.cap_satisfied
        assert instance.params.resamples == 1
        assert "Outlier cap" in caplog.text

    def test_empty_support(self):
        truth = generate_truth(3, 1, 1.0, seed=0)
        with pytest.raises(EmptyObservationError):
            sample_instance(truth, 1e-9, 0.0, 0.0, seed=0)

    @pytest.mark.parametrize("p,alpha,sigma", [(0.0, 0.1, 0.0), (0.5, 1.0, 0.0), (0.5, 0.1, -1.0)])
    def test_invalid_parameters(self, p, alpha, sigma):
        truth = generate_truth(10, 1, 1.0, seed=0)
        with pytest.raises(ConfigError):
            sample_instance(truth, p, alpha, sigma, seed=0)


@pytest.mark.slow
class TestGeneratorContracts:
    """n=400, r=5, kappa=5 over 100 seeds."""

    @pytest.mark.parametrize("seed", range(100))
    def test_truth_and_outlier_cap(self, seed):
        truth = generate_truth(400, 5, 5.0, seed=seed)
        assert max(incoherence(truth)) <= 2.0
        assert truth.sigma[0] / truth.sigma[-1] == pytest.approx(5.0, rel=1e-15)

        alpha, p = 0.15, 0.3
        instance = sample_instance(truth, p, alpha, 0.0, seed=seed)
        cap = 2 * alpha * p * 400
        rows = instance.obs.rows[instance.outlier_positions]
        cols = instance.obs.cols[instance.outlier_positions]
        assert np.bincount(rows, minlength=400).max() <= cap
        assert np.bincount(cols, minlength=400).max() <= cap
        assert instance.params.cap_satisfied
