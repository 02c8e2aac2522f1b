"""
Two-point boundary solver.

Finds the initial velocity v_in with γ(0) = q_in and γ(1) = q_fin by damped
Newton shooting on F(v) = q_v(1) − q_fin, seeded with the second-order
series v ≈ Δq + ½ Γ(q_in) Δq Δq. When Newton fails from the seed, the
target is approached along q_in + s·Δq (s = ¼, ½, ¾, 1) so the returned
solution stays on the branch connected to v = 0.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np

from hamilton_potential.dynamics import (
    DEFAULT_STEPS,
    TangentState,
    Trajectory,
    integrate,
    momentum,
)
from hamilton_potential.errors import (
    DomainError,
    NoConvergence,
    SingularMassMatrix,
    SingularShootingJacobian,
)
from hamilton_potential.geometry import ManifoldModel, alpha_connection

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 50
JACOBIAN_STEP = 1e-6
ARMIJO_FACTOR = 0.5
ARMIJO_SLOPE = 1e-4
MIN_DAMPING = 2.0**-10
HOMOTOPY_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
# Reciprocal condition number below which the shooting Jacobian is singular
SINGULAR_RCOND = 1e-12

Integrator = Callable[[ManifoldModel, float, TangentState, int], Trajectory]


@dataclass(frozen=True)
class ShootingResult:
    v_in: np.ndarray
    residual: float
    iterations: int
    trajectory: Trajectory


def initial_guess(
    model: ManifoldModel,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    alpha: float = 0.0,
) -> np.ndarray:
    """Series seed v^j = Δq^j + ½ Γ^j_kl(q_in) Δq^k Δq^l.

    Uses the Levi-Civita connection by default and the α-connection when
    alpha is given.
    """
    start = model.check(q_in)
    delta = model.check(q_fin) - start
    if not np.any(delta):
        return np.zeros(model.dim)
    gamma = alpha_connection(model, start, alpha).second_kind
    return delta + 0.5 * np.einsum("jkl,k,l->j", gamma, delta, delta)


def _warn_if_far(model: ManifoldModel, q_in: np.ndarray, q_fin: np.ndarray) -> None:
    widths = model.widths()
    delta = np.abs(q_fin - q_in)
    finite = np.isfinite(widths)
    if np.any(delta[finite] > 0.5 * widths[finite]):
        logger.warning(
            "%s: boundary points %s and %s are more than half a domain width apart; "
            "the returned solution is the continuation branch and may not be minimal",
            model.name,
            q_in.tolist(),
            q_fin.tolist(),
        )


def _jacobian(
    flow: Callable[[np.ndarray], Trajectory],
    v: np.ndarray,
    endpoint: np.ndarray,
) -> np.ndarray:
    """Forward-difference ∂q(1)/∂v_in."""
    h = JACOBIAN_STEP * max(1.0, float(np.max(np.abs(v))))
    columns = []
    for j in range(v.size):
        shifted = v.copy()
        shifted[j] += h
        columns.append((flow(shifted).q[-1] - endpoint) / h)
    return np.stack(columns, axis=1)


def _newton(
    flow: Callable[[np.ndarray], Trajectory],
    target: np.ndarray,
    v0: np.ndarray,
    tol: float,
    max_iterations: int,
) -> ShootingResult:
    v = np.array(v0, dtype=float)
    trajectory = flow(v)
    residual_vec = trajectory.q[-1] - target
    residual = float(np.max(np.abs(residual_vec)))
    for iteration in range(max_iterations + 1):
        residual = float(np.max(np.abs(residual_vec)))
        logger.debug("newton iteration %d: residual %.3e", iteration, residual)
        if residual <= tol:
            return ShootingResult(v, residual, iteration, trajectory)
        if iteration == max_iterations:
            break

        jac = _jacobian(flow, v, trajectory.q[-1])
        if 1.0 / np.linalg.cond(jac) < SINGULAR_RCOND:
            raise SingularShootingJacobian(
                f"shooting Jacobian is singular at v={v.tolist()} (possible conjugate point)"
            )
        step = np.linalg.solve(jac, -residual_vec)

        norm = float(np.linalg.norm(residual_vec))
        damping = 1.0
        while True:
            if damping < MIN_DAMPING:
                raise NoConvergence(
                    f"line search stalled at residual {residual:.3e} (v={v.tolist()})"
                )
            trial = v + damping * step
            try:
                trial_trajectory = flow(trial)
            except (DomainError, SingularMassMatrix) as exc:
                logger.warning("damping Newton step (λ=%g): %s", damping, exc)
                damping *= ARMIJO_FACTOR
                continue
            trial_residual = trial_trajectory.q[-1] - target
            trial_norm = float(np.linalg.norm(trial_residual))
            if trial_norm <= (1.0 - ARMIJO_SLOPE * damping) * norm or (
                float(np.max(np.abs(trial_residual))) <= tol
            ):
                break
            damping *= ARMIJO_FACTOR
        v, trajectory, residual_vec = trial, trial_trajectory, trial_residual

    raise NoConvergence(
        f"shooting did not reach tol={tol:g} in {max_iterations} iterations "
        f"(residual {residual:.3e})"
    )


def shoot(
    model: ManifoldModel,
    alpha: float,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    tol: float = 1e-10,
    steps: int = DEFAULT_STEPS,
    integrator: Integrator = integrate,
    guess: np.ndarray | None = None,
    max_iterations: int = MAX_ITERATIONS,
    seed_alpha: float = 0.0,
) -> ShootingResult:
    """Solve the boundary problem γ(0) = q_in, γ(1) = q_fin for v_in.

    Args:
        model: the manifold model
        alpha: deformation parameter passed to the integrator
        q_in, q_fin: boundary points inside the domain
        tol: max-norm tolerance on q(1) − q_fin
        steps: RK4 steps per integration
        integrator: the flow being shot (Euler–Lagrange by default)
        guess: starting velocity; the series seed when omitted
        seed_alpha: connection of the series seeds, for the first attempt and
            the continuation (0 is Levi-Civita)

    Raises:
        NoConvergence: Newton and the homotopy fallback both failed.
        SingularShootingJacobian: singular Jacobian on the continuation path.
        DomainError: a boundary point is outside the domain.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    start = model.check(q_in)
    target = model.check(q_fin)
    _warn_if_far(model, start, target)

    def flow(v: np.ndarray) -> Trajectory:
        return integrator(model, alpha, TangentState(start, v), steps)

    if guess is None:
        seed = initial_guess(model, start, target, seed_alpha)
    else:
        seed = np.asarray(guess, float)
    try:
        return _newton(flow, target, seed, tol, max_iterations)
    except (NoConvergence, SingularShootingJacobian, DomainError, SingularMassMatrix) as exc:
        logger.warning("Newton from the series guess failed (%s); using continuation", exc)

    delta = target - start
    v = initial_guess(model, start, start + HOMOTOPY_FRACTIONS[0] * delta, seed_alpha)
    previous_s = HOMOTOPY_FRACTIONS[0]
    total = 0
    result: ShootingResult | None = None
    for s in HOMOTOPY_FRACTIONS:
        if result is not None:
            v = result.v_in * (s / previous_s)
        try:
            result = _newton(flow, start + s * delta, v, tol, max_iterations)
        except (NoConvergence, DomainError, SingularMassMatrix) as exc:
            raise NoConvergence(f"homotopy failed at s={s}: {exc}") from exc
        logger.debug("homotopy s=%g converged in %d iterations", s, result.iterations)
        total += result.iterations
        previous_s = s
    assert result is not None
    return replace(result, iterations=total)


def endpoint_momenta(
    model: ManifoldModel, alpha: float, result: ShootingResult
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical momenta (p_in, p_fin) at the ends of the shooting solution."""
    trajectory = result.trajectory
    return (
        momentum(model, alpha, trajectory.start),
        momentum(model, alpha, trajectory.endpoint),
    )
