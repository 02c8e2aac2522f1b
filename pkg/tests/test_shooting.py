"""Tests for the two-point boundary solver."""

import logging
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hamilton_potential import shooting
from hamilton_potential.dynamics import integrate_geodesic
from hamilton_potential.errors import DomainError, NoConvergence
from hamilton_potential.library.models import (
    euclidean_cubic_model,
    exponential_model,
    sphere_pullback_model,
    sphere_round_model,
)
from hamilton_potential.shooting import endpoint_momenta, initial_guess, shoot


class TestInitialGuess:
    def test_exponential_series(self):
        guess = initial_guess(exponential_model(), np.array([1.0]), np.array([1.2]))
        assert guess[0] == pytest.approx(0.18)

    def test_euclidean_is_displacement(self):
        q_in = np.array([0.1, 0.2, 0.3])
        q_fin = np.array([0.4, -0.2, 1.0])
        guess = initial_guess(euclidean_cubic_model(), q_in, q_fin)
        np.testing.assert_allclose(guess, q_fin - q_in)

    def test_same_point(self):
        guess = initial_guess(sphere_round_model(), np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        assert np.all(guess == 0.0)

    def test_series_error_is_third_order(self):
        model = sphere_pullback_model()
        q_in = np.array([1.2, 2.5])
        direction = np.array([1.0, 1.0]) / math.sqrt(2.0)
        errors = []
        for size in (0.2, 0.1, 0.05):
            q_fin = q_in + size * direction
            exact = shoot(model, 0.0, q_in, q_fin, tol=1e-12).v_in
            errors.append(float(np.linalg.norm(initial_guess(model, q_in, q_fin) - exact)))
        assert errors[0] / errors[1] > 6.0
        assert errors[1] / errors[2] > 6.0


class TestShoot:
    def test_exponential_unit_velocity(self):
        result = shoot(exponential_model(), 0.0, np.array([1.0]), np.array([math.e]))
        assert result.v_in[0] == pytest.approx(1.0, abs=1e-8)
        assert result.residual <= 1e-10
        assert result.trajectory.endpoint.q[0] == pytest.approx(math.e, abs=1e-10)

    @pytest.mark.parametrize("alpha", [-0.5, 0.25, 1.0])
    def test_exponential_velocity_is_alpha_free(self, alpha):
        result = shoot(exponential_model(), alpha, np.array([1.0]), np.array([1.5]))
        assert result.v_in[0] == pytest.approx(math.log(1.5), abs=1e-8)

    def test_sphere(self):
        q_in = np.array([1.0, 2.5])
        q_fin = np.array([2.0, 3.5])
        result = shoot(sphere_round_model(), 0.0, q_in, q_fin)
        assert result.residual <= 1e-10
        np.testing.assert_allclose(result.trajectory.endpoint.q, q_fin, atol=1e-10)

    def test_converged_guess_needs_no_iterations(self):
        model = exponential_model()
        first = shoot(model, 0.25, np.array([1.0]), np.array([1.5]))
        again = shoot(model, 0.25, np.array([1.0]), np.array([1.5]), guess=first.v_in)
        assert again.iterations == 0
        np.testing.assert_array_equal(again.v_in, first.v_in)

    def test_no_convergence(self):
        with pytest.raises(NoConvergence):
            shoot(
                exponential_model(),
                0.0,
                np.array([1.0]),
                np.array([math.e]),
                guess=np.array([0.0]),
                max_iterations=0,
            )

    def test_invalid_tolerance(self):
        with pytest.raises(ValueError, match="tol"):
            shoot(exponential_model(), 0.0, np.array([1.0]), np.array([2.0]), tol=0.0)

    def test_endpoint_outside_domain(self):
        with pytest.raises(DomainError):
            shoot(exponential_model(), 0.0, np.array([1.0]), np.array([-2.0]))

    def test_far_apart_points_warn(self, caplog):
        model = sphere_round_model()
        with caplog.at_level(logging.WARNING, logger="hamilton_potential.shooting"):
            result = shoot(model, 0.0, np.array([math.pi / 2, 0.5]), np.array([math.pi / 2, 4.0]))
        assert "half a domain width" in caplog.text
        assert result.v_in[1] == pytest.approx(3.5, abs=1e-8)

    @pytest.mark.parametrize(
        "model, alpha, q_in, q_fin",
        [
            (exponential_model(), 0.5, [1.0], [1.05]),
            (sphere_pullback_model(), 1.0, [1.2, 2.5], [1.24, 2.53]),
            (euclidean_cubic_model(), 1.0, [0.1, 0.2, 0.3], [0.13, 0.17, 0.34]),
        ],
    )
    def test_near_diagonal_converges_quickly(self, model, alpha, q_in, q_fin):
        result = shoot(model, alpha, np.array(q_in), np.array(q_fin))
        assert result.iterations <= 8
        np.testing.assert_allclose(result.trajectory.endpoint.q, q_fin, atol=1e-10)

    def test_continuation_seeds_follow_the_shot_connection(self, monkeypatch):
        seed_alphas = []
        newton_calls = []
        series_guess = shooting.initial_guess
        newton = shooting._newton

        def recording_guess(model, q_in, q_fin, alpha=0.0):
            seed_alphas.append(alpha)
            return series_guess(model, q_in, q_fin, alpha)

        def fail_first_attempt(*args):
            newton_calls.append(args)
            if len(newton_calls) == 1:
                raise NoConvergence("forced failure of the first attempt")
            return newton(*args)

        monkeypatch.setattr(shooting, "initial_guess", recording_guess)
        monkeypatch.setattr(shooting, "_newton", fail_first_attempt)
        result = shoot(
            exponential_model(),
            1.0,
            np.array([1.0]),
            np.array([1.5]),
            integrator=integrate_geodesic,
            seed_alpha=1.0,
        )
        assert seed_alphas == [1.0, 1.0]
        assert len(newton_calls) == 1 + len(shooting.HOMOTOPY_FRACTIONS)
        assert result.trajectory.endpoint.q[0] == pytest.approx(1.5, abs=1e-10)


class TestMomenta:
    def test_exponential_endpoint_momenta(self):
        model = exponential_model()
        alpha = 0.25
        result = shoot(model, alpha, np.array([1.0]), np.array([1.5]))
        c = math.log(1.5)
        p_in, p_fin = endpoint_momenta(model, alpha, result)
        assert p_in[0] == pytest.approx(c - alpha * c**2, abs=1e-8)
        assert p_fin[0] == pytest.approx((c - alpha * c**2) / 1.5, abs=1e-8)
