"""
Finite-difference step policy and stencils.

All derivatives the engine does not get analytically go through here:
Christoffel symbols from the metric, ∂T for the Euler–Lagrange equations,
scores of parametric densities, and the mixed-partial stencils that recover
g, Γ and T from a two-point potential on the diagonal.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence

import numpy as np

from hamilton_potential.errors import DomainError

# Central differences with h = max(FLOOR, RELATIVE·|q_j|) per coordinate
RELATIVE_STEP = 1e-5
STEP_FLOOR = 1e-5
MAX_SHRINK = 8


def coordinate_steps(
    q: np.ndarray,
    relative: float = RELATIVE_STEP,
    floor: float = STEP_FLOOR,
) -> np.ndarray:
    """Per-coordinate step sizes for central differences at q."""
    return np.maximum(floor, relative * np.abs(np.asarray(q, dtype=float)))


def central_jacobian(
    fn: Callable[[np.ndarray], np.ndarray],
    q: np.ndarray,
    contains: Callable[[np.ndarray], bool] | None = None,
    relative: float = RELATIVE_STEP,
    floor: float = STEP_FLOOR,
) -> np.ndarray:
    """Central-difference derivative of an array-valued map.

    The derivative index is appended LAST: for fn(q) of shape S the result
    has shape S + (n,). When a stencil point falls outside the domain the
    step is halved up to MAX_SHRINK times before giving up.

    Raises:
        DomainError: if no admissible step was found for some coordinate.
    """
    q = np.asarray(q, dtype=float)
    steps = coordinate_steps(q, relative, floor)
    columns = []
    for m in range(q.size):
        h = steps[m]
        for _ in range(MAX_SHRINK + 1):
            plus = q.copy()
            minus = q.copy()
            plus[m] += h
            minus[m] -= h
            if contains is None or (contains(plus) and contains(minus)):
                break
            h *= 0.5
        else:
            raise DomainError(
                f"finite-difference stencil for coordinate {m} leaves the domain at q={q.tolist()}"
            )
        upper = np.asarray(fn(plus), dtype=float)
        lower = np.asarray(fn(minus), dtype=float)
        columns.append((upper - lower) / (2.0 * h))
    return np.stack(columns, axis=-1)


def five_point_derivative(fn: Callable[[float], np.ndarray], x: float, h: float) -> np.ndarray:
    """Fourth-order central derivative of a scalar-argument map."""
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12.0 * h)


def tensor_product_partial(
    fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    directions: Sequence[np.ndarray],
    h: float,
) -> float:
    """Mixed partial ∂^k fn / ∂d_1 ... ∂d_k at x by a tensor-product central stencil.

    Uses 2^k evaluations x + h·Σ s_i d_i with signs s_i = ±1. Repeated
    directions are allowed: they give the central second difference with
    step 2h along that direction.
    """
    x = np.asarray(x, dtype=float)
    total = 0.0
    for signs in itertools.product((1, -1), repeat=len(directions)):
        offset = sum(s * d for s, d in zip(signs, directions))
        total += math.prod(signs) * fn(x + h * offset)
    return total / (2.0 * h) ** len(directions)


def gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a scalar function with a uniform step."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for m in range(x.size):
        e = np.zeros(x.size)
        e[m] = h
        out[m] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return out
