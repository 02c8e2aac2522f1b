"""Tests for parametric densities: Fisher–Rao data and KL by quadrature."""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hamilton_potential.errors import (
    DomainError,
    NormalizationError,
    SupportMismatch,
    UnknownModel,
)
from hamilton_potential.library.densities import (
    ParametricDensity,
    exponential_density,
    fisher_rao_metric,
    gaussian_density,
    gaussian_mean_density,
    get_density,
    kl_divergence,
    skewness_tensor,
)
from hamilton_potential.utils.quadrature import QuadratureConfig


def _exponential_without_scores() -> ParametricDensity:
    return ParametricDensity(
        name="exponential-fd",
        dim=1,
        sample_domain=(0.0, math.inf),
        density=lambda x, xi: xi[0] * np.exp(-x * xi[0]),
        parameter_domain=((0.0, math.inf),),
    )


class TestFisherRao:
    @pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
    def test_exponential(self, xi):
        density = exponential_density()
        metric = fisher_rao_metric(density, [xi])
        skewness = skewness_tensor(density, [xi])
        assert metric[0, 0] == pytest.approx(1.0 / xi**2, abs=1e-8)
        assert skewness[0, 0, 0] == pytest.approx(-2.0 / xi**3, abs=1e-7)

    def test_gaussian_mean(self):
        density = gaussian_mean_density(sigma=2.0)
        assert fisher_rao_metric(density, [0.3])[0, 0] == pytest.approx(0.25, abs=1e-8)
        assert skewness_tensor(density, [0.3])[0, 0, 0] == pytest.approx(0.0, abs=1e-8)

    def test_gaussian_mean_rejects_bad_sigma(self):
        with pytest.raises(ValueError, match="sigma"):
            gaussian_mean_density(sigma=0.0)

    def test_gaussian_two_parameters(self):
        sigma = 1.5
        density = gaussian_density()
        metric = fisher_rao_metric(density, [0.3, sigma])
        np.testing.assert_allclose(metric, np.diag([1.0, 2.0]) / sigma**2, atol=1e-6)

        skewness = skewness_tensor(density, [0.3, sigma])
        # only T_μμσ (and its permutations) and T_σσσ survive
        assert skewness[0, 0, 1] == pytest.approx(2.0 / sigma**3, abs=1e-6)
        assert skewness[1, 0, 0] == pytest.approx(2.0 / sigma**3, abs=1e-6)
        assert skewness[1, 1, 1] == pytest.approx(8.0 / sigma**3, abs=1e-6)
        assert skewness[0, 0, 0] == pytest.approx(0.0, abs=1e-6)
        assert skewness[0, 1, 1] == pytest.approx(0.0, abs=1e-6)

    def test_gaussian_narrow_off_centre(self):
        sigma = 0.01
        metric = fisher_rao_metric(gaussian_density(), [0.5, sigma])
        np.testing.assert_allclose(metric, np.diag([1.0, 2.0]) / sigma**2, rtol=1e-5, atol=1e-3)

    def test_finite_difference_scores(self):
        density = _exponential_without_scores()
        x = np.array([0.0, 0.5, 3.0])
        np.testing.assert_allclose(density.scores(x, np.array([2.0]))[:, 0], 0.5 - x, atol=1e-9)
        metric = fisher_rao_metric(density, [2.0], QuadratureConfig(tol=1e-8))
        assert metric[0, 0] == pytest.approx(0.25, abs=1e-6)

    def test_unnormalized_density(self):
        half = ParametricDensity(
            name="half-exponential",
            dim=1,
            sample_domain=(0.0, math.inf),
            density=lambda x, xi: 0.5 * xi[0] * np.exp(-x * xi[0]),
        )
        with pytest.raises(NormalizationError, match="integrates to 0.5"):
            fisher_rao_metric(half, [1.0])

    def test_parameters_outside_domain(self):
        with pytest.raises(DomainError, match="outside"):
            fisher_rao_metric(exponential_density(), [-1.0])
        with pytest.raises(DomainError, match="expected 2 parameters"):
            fisher_rao_metric(gaussian_density(), [0.0])


class TestKLDivergence:
    def test_exponential(self):
        density = exponential_density()
        assert kl_divergence(density, [1.0], [2.0]) == pytest.approx(1.0 - math.log(2.0), abs=1e-9)
        assert kl_divergence(density, [2.0], [1.0]) == pytest.approx(math.log(2.0) - 0.5, abs=1e-9)

    def test_same_parameters(self):
        assert kl_divergence(exponential_density(), [1.3], [1.3]) == pytest.approx(0.0, abs=1e-12)

    def test_gaussian_mean(self):
        value = kl_divergence(gaussian_mean_density(sigma=2.0), [0.0], [1.0])
        assert value == pytest.approx(1.0 / 8.0, abs=1e-9)

    def test_vanishing_target_density(self):
        # e^{-1000 x} underflows to zero deep inside the support of e^{-x}
        with pytest.raises(SupportMismatch, match="vanishes"):
            kl_divergence(exponential_density(), [1.0], [1000.0])


class TestRegistry:
    def test_get_density(self):
        assert get_density("gaussian").dim == 2
        assert get_density("exponential").name == "exponential"

    def test_unknown_density(self):
        with pytest.raises(UnknownModel, match="available: exponential, gaussian"):
            get_density("poisson")
