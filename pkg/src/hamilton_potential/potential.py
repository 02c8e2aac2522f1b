"""
Potential engine.

Two-point potentials on a statistical manifold and the recovery of
(g, Γ, T) from their derivatives on the diagonal q_in = q_fin:

  - hamilton_principal: S_α(q_in, q_fin), the action of 𝔏_α along the
    Euler–Lagrange trajectory joining the points in unit time
  - expmap_potential: ½ g(q_in)(v_in, v_in) with v_in the inverse
    exponential map of an α-connection
  - recover / recover_expmap / recover_contrast: tensor-product central
    stencils of a potential around (q, q)

Recovery relations for S_α at the diagonal:
  −∂²S/∂q_fin^k∂q_in^j                = g_jk
  ∂³S/∂q_fin^l∂q_fin^k∂q_in^j         = −_gΓ_jkl − α T_jkl
  ∂³S/∂q_in^l∂q_in^k∂q_fin^j          = −_gΓ_jkl + α T_jkl

and for the exponential-map potential of ∇^α the T terms carry ∓(3α/2).
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from hamilton_potential.api.models import RecoveryReport, TensorErrors
from hamilton_potential.dynamics import DEFAULT_STEPS, integrate_geodesic, lagrangian_function
from hamilton_potential.errors import DomainError, QuadratureNotConverged, SkewnessUnavailable
from hamilton_potential.geometry import ManifoldModel, christoffel_first_kind
from hamilton_potential.shooting import ShootingResult, shoot
from hamilton_potential.utils.finite_diff import gradient, tensor_product_partial
from hamilton_potential.utils.quadrature import trajectory_integral

logger = logging.getLogger(__name__)

PotentialFn = Callable[[np.ndarray, np.ndarray], float]

SECOND_STEP = 1e-4
THIRD_STEP = 1e-3
GRADIENT_STEP = 1e-4
STENCIL_TOL = 1e-11
# A step-doubling difference above QUADRATURE_FACTOR·tol is a failure
QUADRATURE_FACTOR = 10.0


@dataclass(frozen=True)
class PotentialEvaluation:
    value: float
    shooting: ShootingResult
    quadrature_error: float | None


@dataclass(frozen=True)
class RecoveredGeometry:
    """Finite-difference estimates of g, _gΓ and T at a diagonal point.

    skewness is None when it cannot be extracted (α = 0 for S_α).
    """

    point: np.ndarray
    alpha: float | None
    metric: np.ndarray
    gamma_first: np.ndarray
    skewness: np.ndarray | None
    third_fin_fin_in: np.ndarray
    third_in_in_fin: np.ndarray
    step: float
    second_step: float
    metric_condition: float
    source: str

    def require_skewness(self) -> np.ndarray:
        if self.skewness is None:
            raise SkewnessUnavailable(
                f"skewness cannot be extracted from the {self.source} potential at "
                f"alpha={self.alpha}"
            )
        return self.skewness


class LagrangianExpansion(NamedTuple):
    """Taylor data of a Lagrangian at v = 0: gradient, Hessian and third derivatives."""

    gradient: np.ndarray
    metric: np.ndarray
    cubic: np.ndarray

    @property
    def skewness(self) -> np.ndarray:
        """T = −2·∂³𝔏/∂v³, the divergence-Lagrangian relation."""
        return -2.0 * self.cubic


@dataclass(frozen=True)
class DiagonalDerivatives:
    """Mixed partials of a two-point function at (q, q).

    mixed_second[j, k] = ∂²S/∂q_in^j∂q_fin^k
    fin_fin_in[j, k, l] = ∂³S/∂q_in^j∂q_fin^k∂q_fin^l
    in_in_fin[j, k, l]  = ∂³S/∂q_fin^j∂q_in^k∂q_in^l
    """

    mixed_second: np.ndarray
    fin_fin_in: np.ndarray
    in_in_fin: np.ndarray
    second_step: float
    third_step: float


# ═══════════════════════════════════════════════════
# Potentials
# ═══════════════════════════════════════════════════


def _action(shooting: ShootingResult) -> float:
    trajectory = shooting.trajectory
    evaluate = lagrangian_function(trajectory.model, trajectory.alpha)
    values = np.array([evaluate(q, v) for q, v in zip(trajectory.q, trajectory.v)])
    return trajectory_integral(values, trajectory.t)


def _quadrature_error(value: float, refined: float, tol: float, what: str) -> float:
    error = abs(refined - value)
    if error > QUADRATURE_FACTOR * tol:
        raise QuadratureNotConverged(
            f"{what} changed by {error:.3e} when the step count was doubled (tol={tol:g})"
        )
    logger.debug("%s step-doubling difference %.3e", what, error)
    return error


def hamilton_principal(
    model: ManifoldModel,
    alpha: float,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    tol: float = 1e-10,
    steps: int = DEFAULT_STEPS,
    estimate_error: bool = True,
) -> PotentialEvaluation:
    """Hamilton principal function S_α(q_in, q_fin) = ∫₀¹ 𝔏_α(γ, γ̇) dt.

    The action is integrated with composite Simpson over the RK4 samples of
    the shooting solution. With estimate_error the problem is solved again
    at 2·steps and the difference is reported as quadrature_error.

    Raises:
        QuadratureNotConverged: the step-doubling difference exceeds 10·tol.
        NoConvergence, SingularShootingJacobian, DomainError: from shoot.
    """
    shooting = shoot(model, alpha, q_in, q_fin, tol, steps)
    value = _action(shooting)
    error = None
    if estimate_error:
        refined = shoot(model, alpha, q_in, q_fin, tol, 2 * steps, guess=shooting.v_in)
        error = _quadrature_error(value, _action(refined), tol, "action")
    return PotentialEvaluation(value, shooting, error)


def self_dual_potential(
    model: ManifoldModel,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    tol: float = 1e-10,
    steps: int = DEFAULT_STEPS,
) -> float:
    """S with T ≡ 0, i.e. half the squared Riemannian distance."""
    return hamilton_principal(model.self_dual(), 0.0, q_in, q_fin, tol, steps).value


def expmap_potential(
    model: ManifoldModel,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    tol: float = 1e-10,
    steps: int = DEFAULT_STEPS,
    alpha: float = 1.0,
    estimate_error: bool = True,
) -> PotentialEvaluation:
    """½ g_jk(q_in) v_in^j v_in^k with v_in = exp⁻¹_{q_in}(q_fin) for ∇^α."""
    shooting = shoot(
        model, alpha, q_in, q_fin, tol, steps, integrator=integrate_geodesic, seed_alpha=alpha
    )
    start = shooting.trajectory.q[0]
    value = 0.5 * float(shooting.v_in @ model.metric_at(start) @ shooting.v_in)
    error = None
    if estimate_error:
        refined = shoot(
            model,
            alpha,
            q_in,
            q_fin,
            tol,
            2 * steps,
            integrator=integrate_geodesic,
            guess=shooting.v_in,
            seed_alpha=alpha,
        )
        refined_value = 0.5 * float(refined.v_in @ model.metric_at(start) @ refined.v_in)
        error = _quadrature_error(value, refined_value, tol, "exponential-map potential")
    return PotentialEvaluation(value, shooting, error)


def potential_gradient(
    model: ManifoldModel,
    alpha: float,
    q_in: np.ndarray,
    q_fin: np.ndarray,
    h: float | None = None,
    tol: float = STENCIL_TOL,
    steps: int = DEFAULT_STEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (∂S/∂q_in, ∂S/∂q_fin) of S_α."""
    start = model.check(q_in)
    end = model.check(q_fin)
    if h is None:
        h = GRADIENT_STEP * max(1.0, float(np.linalg.norm(start)), float(np.linalg.norm(end)))

    def value(a: np.ndarray, b: np.ndarray) -> float:
        return hamilton_principal(model, alpha, a, b, tol, steps, estimate_error=False).value

    grad_in = gradient(lambda x: value(x, end), start, h)
    grad_fin = gradient(lambda x: value(start, x), end, h)
    return grad_in, grad_fin


# ═══════════════════════════════════════════════════
# Diagonal stencils
# ═══════════════════════════════════════════════════


def default_steps(q: np.ndarray) -> tuple[float, float]:
    """(h₂, h₃) = (1e-4, 1e-3)·max(1, |q|)."""
    scale = max(1.0, float(np.linalg.norm(q)))
    return SECOND_STEP * scale, THIRD_STEP * scale


def _check_margin(
    q: np.ndarray, h3: float, contains: Callable[[np.ndarray], bool] | None
) -> None:
    if contains is None:
        return
    for j in range(q.size):
        for sign in (1.0, -1.0):
            probe = q.copy()
            probe[j] += sign * 2.0 * h3
            if not contains(probe):
                raise DomainError(
                    f"diagonal stencil with step {h3:g} leaves the domain at q={q.tolist()}"
                )


def diagonal_derivatives(
    potential: PotentialFn,
    q: np.ndarray,
    h2: float | None = None,
    h3: float | None = None,
    contains: Callable[[np.ndarray], bool] | None = None,
    workers: int = 1,
) -> DiagonalDerivatives:
    """Second and third mixed partials of a two-point function at (q, q).

    Every stencil point is evaluated; S(q, q) = 0 is not assumed. Repeated
    points are evaluated once, and the distinct evaluations may run on a
    thread pool.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    default_h2, default_h3 = default_steps(q)
    h2 = default_h2 if h2 is None else h2
    h3 = default_h3 if h3 is None else h3
    _check_margin(q, h3, contains)

    x = np.concatenate([q, q])
    basis = np.eye(2 * n)

    def e_in(j: int) -> np.ndarray:
        return basis[j]

    def e_fin(j: int) -> np.ndarray:
        return basis[n + j]

    jobs: list[tuple[str, tuple[int, ...], list[np.ndarray], float]] = []
    for j in range(n):
        for k in range(n):
            jobs.append(("mixed", (j, k), [e_in(j), e_fin(k)], h2))
        for k in range(n):
            for m in range(k, n):
                jobs.append(("ffi", (j, k, m), [e_in(j), e_fin(k), e_fin(m)], h3))
                jobs.append(("iif", (j, k, m), [e_fin(j), e_in(k), e_in(m)], h3))

    points: dict[bytes, np.ndarray] = {}

    def record(z: np.ndarray) -> float:
        points.setdefault(z.tobytes(), z)
        return 0.0

    for _, _, directions, h in jobs:
        tensor_product_partial(record, x, directions, h)

    def evaluate(z: np.ndarray) -> float:
        return float(potential(z[:n], z[n:]))

    keys = list(points)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, (points[key] for key in keys)))
    else:
        values = [evaluate(points[key]) for key in keys]
    cache = dict(zip(keys, values))
    logger.debug("diagonal stencil at %s used %d potential evaluations", q.tolist(), len(cache))

    def lookup(z: np.ndarray) -> float:
        return cache[z.tobytes()]

    mixed = np.empty((n, n))
    fin_fin_in = np.empty((n, n, n))
    in_in_fin = np.empty((n, n, n))
    for kind, index, directions, h in jobs:
        value = tensor_product_partial(lookup, x, directions, h)
        if kind == "mixed":
            mixed[index] = value
            continue
        j, k, m = index
        target = fin_fin_in if kind == "ffi" else in_in_fin
        target[j, k, m] = target[j, m, k] = value
    return DiagonalDerivatives(mixed, fin_fin_in, in_in_fin, h2, h3)


def _assemble(
    q: np.ndarray,
    alpha: float | None,
    derivatives: DiagonalDerivatives,
    skewness: np.ndarray | None,
    source: str,
) -> RecoveredGeometry:
    metric = -derivatives.mixed_second
    return RecoveredGeometry(
        point=q,
        alpha=alpha,
        metric=metric,
        gamma_first=-0.5 * (derivatives.fin_fin_in + derivatives.in_in_fin),
        skewness=skewness,
        third_fin_fin_in=derivatives.fin_fin_in,
        third_in_in_fin=derivatives.in_in_fin,
        step=derivatives.third_step,
        second_step=derivatives.second_step,
        metric_condition=float(np.linalg.cond(metric)),
        source=source,
    )


def recover(
    model: ManifoldModel,
    alpha: float,
    q: np.ndarray,
    h: float | None = None,
    tol: float = STENCIL_TOL,
    steps: int = DEFAULT_STEPS,
    workers: int = 1,
) -> RecoveredGeometry:
    """Recover g, _gΓ and T at q from S_α by diagonal finite differences.

    h is the third-derivative step; second derivatives use h/10. The
    default is h = 1e-3·max(1, |q|).

    Raises:
        DomainError: q too close to the boundary for the stencil.
    """
    q = model.check(q)
    h2, h3 = (None, None) if h is None else (h / 10.0, h)

    def potential(a: np.ndarray, b: np.ndarray) -> float:
        return hamilton_principal(model, alpha, a, b, tol, steps, estimate_error=False).value

    derivatives = diagonal_derivatives(potential, q, h2, h3, model.contains, workers)
    skewness = None
    if alpha != 0.0:
        skewness = (derivatives.in_in_fin - derivatives.fin_fin_in) / (2.0 * alpha)
    return _assemble(q, alpha, derivatives, skewness, "hamilton")


def recover_expmap(
    model: ManifoldModel,
    q: np.ndarray,
    h: float | None = None,
    tol: float = STENCIL_TOL,
    steps: int = DEFAULT_STEPS,
    alpha: float = 1.0,
    workers: int = 1,
) -> RecoveredGeometry:
    """Recover g, _gΓ and T from the exponential-map potential of ∇^α.

    At the diagonal ∂³S/∂fin∂fin∂in = −_gΓ + (3α/2)T and
    ∂³S/∂in∂in∂fin = −_gΓ − (3α/2)T.
    """
    q = model.check(q)
    h2, h3 = (None, None) if h is None else (h / 10.0, h)

    def potential(a: np.ndarray, b: np.ndarray) -> float:
        return expmap_potential(model, a, b, tol, steps, alpha, estimate_error=False).value

    derivatives = diagonal_derivatives(potential, q, h2, h3, model.contains, workers)
    skewness = None
    if alpha != 0.0:
        skewness = (derivatives.fin_fin_in - derivatives.in_in_fin) / (3.0 * alpha)
    return _assemble(q, alpha, derivatives, skewness, "expmap")


def recover_contrast(
    potential: PotentialFn,
    q: np.ndarray,
    h: float | None = None,
    contains: Callable[[np.ndarray], bool] | None = None,
    workers: int = 1,
) -> RecoveredGeometry:
    """Classical contrast-function recovery.

    g = −∂²S/∂in∂fin, T = ∂³S/∂in∂fin∂fin − ∂³S/∂fin∂in∂in and
    _gΓ = −(sum of the two third derivatives)/2, as for a divergence
    D(q_in ‖ q_fin) such as the Kullback–Leibler divergence.
    """
    q = np.asarray(q, dtype=float)
    h2, h3 = (None, None) if h is None else (h / 10.0, h)
    derivatives = diagonal_derivatives(potential, q, h2, h3, contains, workers)
    skewness = derivatives.fin_fin_in - derivatives.in_in_fin
    return _assemble(q, None, derivatives, skewness, "contrast")


def expand_divergence_lagrangian(
    lagrangian: Callable[[np.ndarray, np.ndarray], float],
    q: np.ndarray,
    h: float = THIRD_STEP,
) -> LagrangianExpansion:
    """Central differences in v at v = 0 up to third order.

    For a Lagrangian built from a divergence the gradient vanishes, the
    Hessian is g and the third derivatives are −T/2.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    zero = np.zeros(n)
    basis = np.eye(n)

    def in_v(v: np.ndarray) -> float:
        return float(lagrangian(q, v))

    h_low = h / 10.0
    grad = gradient(in_v, zero, h_low)
    hess = np.empty((n, n))
    third = np.empty((n, n, n))
    for j in range(n):
        for k in range(n):
            hess[j, k] = tensor_product_partial(in_v, zero, [basis[j], basis[k]], h_low)
            for m in range(n):
                third[j, k, m] = tensor_product_partial(
                    in_v, zero, [basis[j], basis[k], basis[m]], h
                )
    return LagrangianExpansion(grad, hess, third)


def recovery_report(model: ManifoldModel, recovered: RecoveredGeometry) -> RecoveryReport:
    """Recovered tensors with max-abs errors against the model's analytic tensors."""
    q = recovered.point
    metric_error = float(np.max(np.abs(recovered.metric - model.metric_at(q))))
    gamma_error = float(
        np.max(np.abs(recovered.gamma_first - christoffel_first_kind(model, q)))
    )
    skewness_error = None
    if recovered.skewness is not None:
        skewness_error = float(np.max(np.abs(recovered.skewness - model.skewness_at(q))))
    return RecoveryReport(
        model=model.name,
        source=recovered.source,
        point=q.tolist(),
        alpha=recovered.alpha,
        step=recovered.step,
        second_step=recovered.second_step,
        metric=recovered.metric.tolist(),
        gamma_first=recovered.gamma_first.tolist(),
        skewness=None if recovered.skewness is None else recovered.skewness.tolist(),
        third_fin_fin_in=recovered.third_fin_fin_in.tolist(),
        third_in_in_fin=recovered.third_in_in_fin.tolist(),
        metric_condition=recovered.metric_condition,
        errors_vs_model=TensorErrors(
            metric=metric_error, gamma_first=gamma_error, skewness=skewness_error
        ),
    )
