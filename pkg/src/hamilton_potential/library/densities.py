"""
Parametric densities and their Fisher–Rao data by quadrature.

g_jk(ξ)  = ∫ p (∂_j log p)(∂_k log p) dx
T_jkl(ξ) = ∫ p (∂_j log p)(∂_k log p)(∂_l log p) dx
D(ξ_in ‖ ξ_fin) = ∫ p(x, ξ_in) ln(p(x, ξ_in)/p(x, ξ_fin)) dx

Integrals use adaptive Gauss–Legendre after truncating infinite tails where
p < 1e-16·max p.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from hamilton_potential.errors import (
    DomainError,
    NormalizationError,
    SupportMismatch,
    UnknownModel,
)
from hamilton_potential.utils.finite_diff import five_point_derivative
from hamilton_potential.utils.quadrature import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    gauss_legendre,
    truncate_support,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-6
# Five-point score step; smaller steps let roundoff stall the adaptive quadrature
SCORE_STEP = 1e-3

DensityFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
ScoreFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
ModeFn = Callable[[np.ndarray], tuple[float, float]]


@dataclass(frozen=True)
class ParametricDensity:
    """A family p(x; ξ) on an interval of the outcome variable x.

    density and log_density_gradient are vectorized in x: for m abscissae
    they return shapes (m,) and (m, n). mode, when given, maps ξ to the
    location and width of the bulk of p(·; ξ); it anchors tail truncation
    and scales finite-difference score steps.
    """

    name: str
    dim: int
    sample_domain: tuple[float, float]
    density: DensityFn
    log_density_gradient: ScoreFn | None = None
    parameter_domain: tuple[tuple[float, float], ...] | None = None
    mode: ModeFn | None = None

    def check(self, xi: Sequence[float] | np.ndarray) -> np.ndarray:
        point = np.asarray(xi, dtype=float).reshape(-1)
        if point.shape != (self.dim,):
            raise DomainError(f"{self.name}: expected {self.dim} parameters, got {point.size}")
        if self.parameter_domain is not None:
            for x, (lo, hi) in zip(point, self.parameter_domain):
                if not lo < x < hi:
                    raise DomainError(
                        f"{self.name}: parameters {point.tolist()} outside "
                        f"{list(self.parameter_domain)}"
                    )
        return point

    def pdf(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self.density(np.asarray(x, dtype=float), xi), dtype=float)

    def scores(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """∂ log p/∂ξ^j at each abscissa, shape (m, n)."""
        x = np.asarray(x, dtype=float)
        if self.log_density_gradient is not None:
            return np.asarray(self.log_density_gradient(x, xi), dtype=float).reshape(x.size, -1)
        columns = []
        width = self.mode(xi)[1] if self.mode is not None else None
        for j in range(self.dim):
            h = SCORE_STEP * (width if width is not None else max(1.0, abs(float(xi[j]))))

            def log_p(value: float, j: int = j) -> np.ndarray:
                shifted = np.array(xi, dtype=float)
                shifted[j] = value
                return np.log(self.pdf(x, shifted))

            columns.append(five_point_derivative(log_p, float(xi[j]), h))
        return np.stack(columns, axis=1)

    def support(self, xi: np.ndarray, quad: QuadratureConfig) -> tuple[float, float]:
        lo, hi = self.sample_domain
        center: float | None = None
        width = 1.0
        if self.mode is not None:
            center, width = self.mode(xi)
        return truncate_support(
            lambda x: self.pdf(x, xi), lo, hi, quad.truncation_ratio, center=center, scale=width
        )


def _check_normalization(
    density: ParametricDensity, xi: np.ndarray, bounds: tuple[float, float], quad: QuadratureConfig
) -> None:
    mass, _ = gauss_legendre(lambda x: density.pdf(x, xi), *bounds, quad)
    if abs(float(mass) - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(
            f"{density.name} integrates to {float(mass):.12g} at ξ={xi.tolist()}"
        )


def fisher_rao_metric(
    density: ParametricDensity,
    xi: Sequence[float] | np.ndarray,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> np.ndarray:
    """Fisher–Rao metric g_jk(ξ) by quadrature.

    Raises:
        NormalizationError: ∫p deviates from 1 by more than 1e-6.
        QuadratureNotConverged: from the adaptive rule.
    """
    point = density.check(xi)
    bounds = density.support(point, quad)
    _check_normalization(density, point, bounds, quad)

    def integrand(x: np.ndarray) -> np.ndarray:
        p = density.pdf(x, point)
        s = density.scores(x, point)
        return p[:, None, None] * s[:, :, None] * s[:, None, :]

    metric, _ = gauss_legendre(integrand, *bounds, quad)
    return 0.5 * (metric + metric.T)


def skewness_tensor(
    density: ParametricDensity,
    xi: Sequence[float] | np.ndarray,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> np.ndarray:
    """Amari–Chentsov skewness T_jkl(ξ) by quadrature."""
    point = density.check(xi)
    bounds = density.support(point, quad)
    _check_normalization(density, point, bounds, quad)

    def integrand(x: np.ndarray) -> np.ndarray:
        p = density.pdf(x, point)
        s = density.scores(x, point)
        return np.einsum("m,mj,mk,ml->mjkl", p, s, s, s)

    tensor, _ = gauss_legendre(integrand, *bounds, quad)
    return tensor


def kl_divergence(
    density: ParametricDensity,
    xi_in: Sequence[float] | np.ndarray,
    xi_fin: Sequence[float] | np.ndarray,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Kullback–Leibler divergence D(p_{ξ_in} ‖ p_{ξ_fin}).

    Raises:
        SupportMismatch: the log-ratio is not finite where p_{ξ_in} has mass.
    """
    start = density.check(xi_in)
    end = density.check(xi_fin)
    bounds = density.support(start, quad)
    _check_normalization(density, start, bounds, quad)

    def integrand(x: np.ndarray) -> np.ndarray:
        p_in = density.pdf(x, start)
        p_fin = density.pdf(x, end)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(p_in > 0.0, p_in * (np.log(p_in) - np.log(p_fin)), 0.0)
        if not np.all(np.isfinite(values)):
            raise SupportMismatch(
                f"{density.name}: p(·; {end.tolist()}) vanishes where p(·; {start.tolist()}) "
                "has mass"
            )
        return values

    value, _ = gauss_legendre(integrand, *bounds, quad)
    return float(value)


# ═══════════════════════════════════════════════════
# Builtin families
# ═══════════════════════════════════════════════════


def exponential_density() -> ParametricDensity:
    """p(x; ξ) = ξ e^{−xξ} on x ≥ 0, score 1/ξ − x."""
    return ParametricDensity(
        name="exponential",
        dim=1,
        sample_domain=(0.0, math.inf),
        density=lambda x, xi: xi[0] * np.exp(-x * xi[0]),
        log_density_gradient=lambda x, xi: (1.0 / xi[0] - x)[:, None],
        parameter_domain=((0.0, math.inf),),
        mode=lambda xi: (0.0, 1.0 / xi[0]),
    )


def gaussian_mean_density(sigma: float = 1.0) -> ParametricDensity:
    """Normal with fixed standard deviation, parametrized by its mean."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    return ParametricDensity(
        name="gaussian-mean",
        dim=1,
        sample_domain=(-math.inf, math.inf),
        density=lambda x, xi: norm * np.exp(-0.5 * ((x - xi[0]) / sigma) ** 2),
        log_density_gradient=lambda x, xi: ((x - xi[0]) / sigma**2)[:, None],
        mode=lambda xi: (float(xi[0]), sigma),
    )


def gaussian_density() -> ParametricDensity:
    """Normal parametrized by (mean, standard deviation); scores by finite differences."""

    def density(x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        mu, sigma = xi[0], xi[1]
        return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))

    return ParametricDensity(
        name="gaussian",
        dim=2,
        sample_domain=(-math.inf, math.inf),
        density=density,
        parameter_domain=((-math.inf, math.inf), (0.0, math.inf)),
        mode=lambda xi: (float(xi[0]), float(xi[1])),
    )


BUILTIN_DENSITIES: dict[str, Callable[[], ParametricDensity]] = {
    "exponential": exponential_density,
    "gaussian-mean": gaussian_mean_density,
    "gaussian": gaussian_density,
}


def get_density(name: str) -> ParametricDensity:
    try:
        return BUILTIN_DENSITIES[name]()
    except KeyError:
        raise UnknownModel(
            f"unknown density {name!r}; available: {', '.join(sorted(BUILTIN_DENSITIES))}"
        ) from None
