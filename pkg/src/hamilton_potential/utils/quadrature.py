"""
Quadrature helpers.

- Adaptive panel-doubling Gauss–Legendre for smooth, exponentially decaying
  integrands on (possibly unbounded) intervals, with tail truncation.
- Composite Simpson over uniformly sampled trajectories (action integrals).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from hamilton_potential.errors import QuadratureNotConverged

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for adaptive Gauss–Legendre integration."""

    tol: float = 1e-12
    order: int = 15
    initial_panels: int = 4
    max_panels: int = 8192
    truncation_ratio: float = 1e-16


DEFAULT_QUADRATURE = QuadratureConfig()


def _composite(
    integrand: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    values = np.asarray(integrand(x), dtype=float)
    return np.tensordot(w, values, axes=1)


def gauss_legendre(
    integrand: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    config: QuadratureConfig = DEFAULT_QUADRATURE,
) -> tuple[np.ndarray, float]:
    """Integrate a vectorized integrand over the finite interval [a, b].

    The integrand maps an array of m abscissae to an array of shape
    (m, *S); the result has shape S. The number of equal panels is doubled
    until two successive estimates agree within tol·max(1, |I|).

    Returns:
        (integral, error estimate)

    Raises:
        QuadratureNotConverged: if max_panels is reached first.
    """
    nodes, weights = np.polynomial.legendre.leggauss(config.order)
    panels = config.initial_panels
    previous = _composite(integrand, a, b, panels, nodes, weights)
    while panels < config.max_panels:
        panels *= 2
        current = _composite(integrand, a, b, panels, nodes, weights)
        error = float(np.max(np.abs(current - previous)))
        scale = max(1.0, float(np.max(np.abs(current))))
        if error <= config.tol * scale:
            logger.debug("Gauss-Legendre converged on [%g, %g] with %d panels", a, b, panels)
            return current, error
        previous = current
    raise QuadratureNotConverged(
        f"Gauss-Legendre on [{a}, {b}] did not reach tol={config.tol} "
        f"with {config.max_panels} panels"
    )


def _tail_cutoff(
    density: Callable[[np.ndarray], np.ndarray],
    start: float,
    direction: float,
    peak: float,
    ratio: float,
    step: float,
) -> tuple[float, float]:
    for _ in range(80):
        x = start + direction * step
        value = float(density(np.array([x]))[0])
        if math.isfinite(value):
            peak = max(peak, value)
            if value < ratio * peak:
                return x, peak
        step *= 2.0
    raise QuadratureNotConverged(f"density tail does not decay beyond {start + direction * step}")


def _coarse_mode(
    density: Callable[[np.ndarray], np.ndarray], start: float, lower: float, upper: float
) -> tuple[float, float]:
    offsets = 2.0 ** np.arange(-20, 41)
    grid = np.concatenate(([start], start + offsets, start - offsets))
    grid = grid[(grid >= lower) & (grid <= upper)]
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(density(grid), dtype=float)
    values = np.where(np.isfinite(values), values, 0.0)
    best = int(np.argmax(values))
    if values[best] <= 0.0:
        raise QuadratureNotConverged(f"density has no detectable mass around x={start}")
    return float(grid[best]), float(values[best])


def truncate_support(
    density: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float,
    ratio: float = DEFAULT_QUADRATURE.truncation_ratio,
    center: float | None = None,
    scale: float = 1.0,
) -> tuple[float, float]:
    """Replace infinite bounds by points where the density drops below ratio·max p.

    The sweep starts at center (clipped into [lower, upper]) and doubles its
    step outward from scale, keeping a running maximum. Without a center it
    starts at the finite bound, or 0 for the whole line, and falls back to
    the best point of a coarse geometric grid when the density vanishes
    there. Adequate for unimodal families.
    """
    if math.isfinite(lower) and math.isfinite(upper):
        return lower, upper
    if scale <= 0.0 or not math.isfinite(scale):
        raise ValueError(f"scale must be positive and finite, got {scale}")
    if center is not None:
        start = min(max(center, lower), upper)
    elif math.isfinite(lower):
        start = lower
    elif math.isfinite(upper):
        start = upper
    else:
        start = 0.0
    probe = float(density(np.array([start]))[0])
    peak = probe if math.isfinite(probe) else 0.0
    if peak <= 0.0:
        start, peak = _coarse_mode(density, start, lower, upper)
    if not math.isfinite(upper):
        upper, peak = _tail_cutoff(density, start, 1.0, peak, ratio, scale)
    if not math.isfinite(lower):
        lower, peak = _tail_cutoff(density, start, -1.0, peak, ratio, scale)
    return lower, upper


def trajectory_integral(values: np.ndarray, t: np.ndarray) -> float:
    """Composite Simpson rule over uniformly spaced trajectory samples."""
    return float(simpson(np.asarray(values, dtype=float), x=np.asarray(t, dtype=float)))
