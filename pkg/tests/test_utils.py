"""Tests for finite differences, quadrature and output helpers."""

import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hamilton_potential.errors import DomainError, QuadratureNotConverged
from hamilton_potential.utils.finite_diff import (
    central_jacobian,
    coordinate_steps,
    five_point_derivative,
    gradient,
    tensor_product_partial,
)
from hamilton_potential.utils.io import format_float, render_csv, render_json, write_text
from hamilton_potential.utils.quadrature import (
    QuadratureConfig,
    gauss_legendre,
    trajectory_integral,
    truncate_support,
)


class TestFiniteDifferences:
    def test_coordinate_steps_floor_and_relative(self):
        steps = coordinate_steps(np.array([0.0, 10.0, -1e6]))
        assert steps[0] == pytest.approx(1e-5)
        assert steps[1] == pytest.approx(1e-4)
        assert steps[2] == pytest.approx(10.0)

    def test_central_jacobian_appends_derivative_index(self):
        def field(q):
            x, y = q
            return np.array([[x * y, x**2], [y**3, 1.0]])

        jac = central_jacobian(field, np.array([1.0, 2.0]))
        assert jac.shape == (2, 2, 2)
        assert jac[0, 0, 0] == pytest.approx(2.0, abs=1e-8)
        assert jac[0, 0, 1] == pytest.approx(1.0, abs=1e-8)
        assert jac[0, 1, 0] == pytest.approx(2.0, abs=1e-8)
        assert jac[1, 0, 1] == pytest.approx(12.0, abs=1e-6)
        assert jac[1, 1, 0] == 0.0

    def test_central_jacobian_shrinks_near_boundary(self):
        def inside(q):
            return q[0] > 0.0

        q = np.array([3e-6])
        jac = central_jacobian(lambda p: np.array([p[0] ** 2]), q, contains=inside)
        assert jac[0, 0] == pytest.approx(6e-6, abs=1e-9)

    def test_central_jacobian_gives_up(self):
        def inside(q):
            return q[0] > 0.0

        with pytest.raises(DomainError, match="leaves the domain"):
            central_jacobian(lambda p: p, np.array([1e-12]), contains=inside)

    def test_five_point_derivative(self):
        value = five_point_derivative(lambda x: np.array(math.sin(x)), 0.3, 1e-3)
        assert float(value) == pytest.approx(math.cos(0.3), abs=1e-12)

    def test_tensor_product_mixed_partial(self):
        def fn(z):
            return z[0] * z[1] ** 2 + z[2] ** 3

        basis = np.eye(3)
        x = np.array([0.5, 2.0, -1.0])
        assert tensor_product_partial(fn, x, [basis[0], basis[1]], 1e-3) == pytest.approx(4.0)
        # repeated direction: second derivative with step 2h
        value = tensor_product_partial(fn, x, [basis[2], basis[2]], 1e-3)
        assert value == pytest.approx(-6.0, abs=1e-5)
        third = tensor_product_partial(fn, x, [basis[0], basis[1], basis[1]], 1e-3)
        assert third == pytest.approx(2.0, abs=1e-6)

    def test_gradient(self):
        grad = gradient(lambda x: float(x @ x), np.array([1.0, -2.0]), 1e-4)
        np.testing.assert_allclose(grad, [2.0, -4.0], atol=1e-9)


class TestQuadrature:
    def test_polynomial(self):
        value, error = gauss_legendre(lambda x: x**2, 0.0, 1.0)
        assert float(value) == pytest.approx(1.0 / 3.0, abs=1e-14)
        assert error <= 1e-12

    def test_array_valued_integrand(self):
        value, _ = gauss_legendre(lambda x: np.stack([x, np.cos(x)], axis=1), 0.0, math.pi)
        np.testing.assert_allclose(value, [math.pi**2 / 2.0, 0.0], atol=1e-12)

    def test_panel_budget_exhausted(self):
        config = QuadratureConfig(initial_panels=4, max_panels=4)
        with pytest.raises(QuadratureNotConverged):
            gauss_legendre(lambda x: x, 0.0, 1.0, config)

    def test_truncate_half_line(self):
        lower, upper = truncate_support(lambda x: np.exp(-x), 0.0, math.inf)
        assert lower == 0.0
        assert math.exp(-upper) < 1e-16
        assert math.isfinite(upper)

    def test_truncate_whole_line(self):
        lower, upper = truncate_support(lambda x: np.exp(-0.5 * x**2), -math.inf, math.inf)
        assert lower < -8.0
        assert upper > 8.0

    def test_truncate_narrow_off_centre_peak(self):
        def narrow(x):
            return np.exp(-0.5 * ((x - 0.3) / 0.01) ** 2)

        lower, upper = truncate_support(narrow, -math.inf, math.inf, center=0.3, scale=0.01)
        assert 0.3 - 0.4 < lower < 0.3 - 0.086
        assert 0.3 + 0.086 < upper < 0.3 + 0.4

    def test_truncate_finds_mass_away_from_origin(self):
        def narrow(x):
            return np.exp(-0.5 * ((x - 0.5) / 0.01) ** 2)

        lower, upper = truncate_support(narrow, -math.inf, math.inf)
        assert lower < 0.4
        assert upper > 0.6

    def test_truncate_without_mass(self):
        with pytest.raises(QuadratureNotConverged, match="no detectable mass"):
            truncate_support(lambda x: np.zeros_like(x), -math.inf, math.inf)

    def test_truncate_rejects_bad_scale(self):
        with pytest.raises(ValueError, match="scale"):
            truncate_support(lambda x: np.exp(-x), 0.0, math.inf, scale=0.0)

    def test_finite_bounds_untouched(self):
        assert truncate_support(lambda x: x, -1.0, 2.0) == (-1.0, 2.0)

    def test_trajectory_integral_simpson_exact_for_cubics(self):
        t = np.linspace(0.0, 1.0, 201)
        assert trajectory_integral(t**3 - t, t) == pytest.approx(0.25 - 0.5, abs=1e-14)


class TestOutput:
    def test_format_float_round_trips(self):
        value = 0.1 + 0.2
        assert float(format_float(value)) == value
        assert format_float(None) == ""
        assert format_float(float("nan")) == "nan"
        assert format_float(-math.inf) == "-inf"

    def test_render_csv(self):
        text = render_csv(["a", "b", "ok"], [[1, 0.5, True], [None, np.float64(2.0), False]])
        assert text == "a,b,ok\n1,0.5,true\n,2,false\n"

    def test_render_json_converts_numpy(self):
        text = render_json({"metric": np.eye(2), "n": np.int64(3)})
        data = json.loads(text)
        assert data == {"metric": [[1.0, 0.0], [0.0, 1.0]], "n": 3}
        assert text.endswith("\n")

    def test_write_text_creates_parents(self, tmp_path):
        target = write_text("x\n", tmp_path / "nested" / "out.csv")
        assert target.read_text() == "x\n"
