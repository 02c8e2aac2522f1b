"""
Builtin statistical manifolds, the model registry and closed-form oracles.

Builtin names:
  exponential1d        ℝ⁺ with g = 1/ξ², T = −2/ξ³ (exponential distributions)
  exponential-log      the same family in y = ln ξ: g = 1, T = −2
  kl-free              raw Lagrangian 𝔏(y, u) = e^u − u − 1 on ℝ
  euclidean-cubic-r3   ℝ³ with g = δ and T = Σ dxᵢ³
  sphere-pullback      g and T of euclidean-cubic-r3 pulled back to S²
  sphere-round         the round sphere with T ≡ 0
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from hamilton_potential.api.models import ModelSpec
from hamilton_potential.errors import ConfigError, DomainError, UnknownModel
from hamilton_potential.geometry import Immersion, ManifoldModel, pullback_model, unbounded

ModelFactory = Callable[[], ManifoldModel]
PotentialOracle = Callable[[np.ndarray, np.ndarray, float], float]

SPHERE_MARGIN = 1e-3
SPHERE_DOMAIN = ((0.0, math.pi), (0.0, 2.0 * math.pi))


# ═══════════════════════════════════════════════════
# Exponential distributions
# ═══════════════════════════════════════════════════


def exponential_model() -> ManifoldModel:
    """p(x; ξ) = ξ e^{−xξ} in the natural coordinate ξ > 0."""
    return ManifoldModel(
        name="exponential1d",
        dim=1,
        domain=((0.0, math.inf),),
        metric=lambda q: np.array([[1.0 / q[0] ** 2]]),
        skewness=lambda q: np.array([[[-2.0 / q[0] ** 3]]]),
        christoffel_first=lambda q: np.array([[[-1.0 / q[0] ** 3]]]),
        skewness_gradient=lambda q: np.array([[[[6.0 / q[0] ** 4]]]]),
        description="exponential distributions, g = 1/ξ², T = −2/ξ³",
    )


def exponential_log_model() -> ManifoldModel:
    """The exponential family in the chart y = ln ξ."""
    return ManifoldModel(
        name="exponential-log",
        dim=1,
        domain=unbounded(1),
        metric=lambda q: np.ones((1, 1)),
        skewness=lambda q: np.full((1, 1, 1), -2.0),
        christoffel_first=lambda q: np.zeros((1, 1, 1)),
        skewness_gradient=lambda q: np.zeros((1, 1, 1, 1)),
        description="exponential distributions in y = ln ξ, g = 1, T = −2",
    )


def kl_lagrangian(q: np.ndarray, v: np.ndarray) -> float:
    """𝔏(y, u) = e^u − u − 1, summed over coordinates."""
    u = np.asarray(v, dtype=float)
    return float(np.sum(np.expm1(u) - u))


def kl_free_model() -> ManifoldModel:
    """Free particle whose principal function is the Kullback–Leibler divergence.

    g and T are the declared Taylor data of the Lagrangian at u = 0; the
    dynamics use the raw Lagrangian.
    """
    return ManifoldModel(
        name="kl-free",
        dim=1,
        domain=unbounded(1),
        metric=lambda q: np.ones((1, 1)),
        skewness=lambda q: np.full((1, 1, 1), -2.0),
        christoffel_first=lambda q: np.zeros((1, 1, 1)),
        skewness_gradient=lambda q: np.zeros((1, 1, 1, 1)),
        lagrangian=kl_lagrangian,
        description="raw Lagrangian e^u − u − 1 on ℝ",
    )


def closed_form_potential_exponential(xi_in: float, xi_fin: float, alpha: float) -> float:
    """S_α = ln²(ξ_fin/ξ_in)/2 − (α/3) ln³(ξ_fin/ξ_in)."""
    if xi_in <= 0 or xi_fin <= 0:
        raise DomainError(f"exponential parameters must be positive, got {xi_in}, {xi_fin}")
    r = math.log(xi_fin / xi_in)
    return r**2 / 2.0 - alpha / 3.0 * r**3


def closed_form_trajectory_exponential(
    xi_in: float, v_in: float, t: float | np.ndarray
) -> np.ndarray:
    """ξ(t) = ξ_in e^{(v_in/ξ_in) t}, the same for every α."""
    return xi_in * np.exp(v_in / xi_in * np.asarray(t, dtype=float))


# ═══════════════════════════════════════════════════
# Euclidean ℝ³ and the sphere
# ═══════════════════════════════════════════════════


def _axis_cubic(dim: int) -> np.ndarray:
    tensor = np.zeros((dim, dim, dim))
    for i in range(dim):
        tensor[i, i, i] = 1.0
    return tensor


def euclidean_cubic_model() -> ManifoldModel:
    """ℝ³ with the Euclidean metric and T = Σ dxᵢ ⊗ dxᵢ ⊗ dxᵢ."""
    cubic = _axis_cubic(3)
    return ManifoldModel(
        name="euclidean-cubic-r3",
        dim=3,
        domain=unbounded(3),
        metric=lambda q: np.eye(3),
        skewness=lambda q: cubic.copy(),
        christoffel_first=lambda q: np.zeros((3, 3, 3)),
        skewness_gradient=lambda q: np.zeros((3, 3, 3, 3)),
        description="ℝ³ with g = δ, T = Σ dxᵢ³",
    )


def euclidean_cubic_potential(q_in: np.ndarray, q_fin: np.ndarray, alpha: float) -> float:
    """Action along the straight line: ½|Δq|² + (α/6) Σ Δqᵢ³."""
    delta = np.asarray(q_fin, dtype=float) - np.asarray(q_in, dtype=float)
    return 0.5 * float(delta @ delta) + alpha / 6.0 * float(np.sum(delta**3))


def _sphere_map(q: np.ndarray) -> np.ndarray:
    theta, phi = q
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def _sphere_jacobian(q: np.ndarray) -> np.ndarray:
    theta, phi = q
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    return np.array([[ct * cp, -st * sp], [ct * sp, st * cp], [-st, 0.0]])


def _sphere_hessian(q: np.ndarray) -> np.ndarray:
    theta, phi = q
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    return np.array(
        [
            [[-st * cp, -ct * sp], [-ct * sp, -st * cp]],
            [[-st * sp, ct * cp], [ct * cp, -st * sp]],
            [[-ct, 0.0], [0.0, 0.0]],
        ]
    )


def sphere_immersion() -> Immersion:
    """(θ, φ) ↦ (sin θ cos φ, sin θ sin φ, cos θ) with analytic derivatives."""
    return Immersion(
        source_dim=2,
        target_dim=3,
        map=_sphere_map,
        jacobian=_sphere_jacobian,
        hessian=_sphere_hessian,
        name="sphere",
    )


def _sphere_metric(q: np.ndarray) -> np.ndarray:
    return np.diag([1.0, math.sin(q[0]) ** 2])


def _sphere_christoffel(q: np.ndarray) -> np.ndarray:
    """Round-sphere _Γ_jkl: Γ_θφφ = −sinθ cosθ, Γ_φθφ = Γ_φφθ = sinθ cosθ."""
    sc = math.sin(q[0]) * math.cos(q[0])
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -sc
    gamma[1, 0, 1] = gamma[1, 1, 0] = sc
    return gamma


def sphere_pullback_model() -> ManifoldModel:
    return pullback_model(
        euclidean_cubic_model(),
        sphere_immersion(),
        SPHERE_DOMAIN,
        name="sphere-pullback",
        christoffel_first=_sphere_christoffel,
        boundary_margin=SPHERE_MARGIN,
        description="g and T of euclidean-cubic-r3 pulled back to S²",
    )


def sphere_round_model() -> ManifoldModel:
    return ManifoldModel(
        name="sphere-round",
        dim=2,
        domain=SPHERE_DOMAIN,
        metric=_sphere_metric,
        skewness=lambda q: np.zeros((2, 2, 2)),
        christoffel_first=_sphere_christoffel,
        skewness_gradient=lambda q: np.zeros((2, 2, 2, 2)),
        boundary_margin=SPHERE_MARGIN,
        description="round sphere dθ² + sin²θ dφ², T ≡ 0",
    )


def sphere_pullback_tensors_closed_form(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form g and T of the sphere pullback of (δ, Σ dxᵢ³).

    T_θθθ = cos³θ(cos³φ + sin³φ) − sin³θ
    T_θθφ = −cos²θ sinθ sinφ cosφ (cosφ − sinφ)
    T_θφφ = sin²θ cosθ sinφ cosφ (cosφ + sinφ)
    T_φφφ = sin³θ (cos³φ − sin³φ)
    """
    theta, phi = float(q[0]), float(q[1])
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    t_000 = ct**3 * (cp**3 + sp**3) - st**3
    t_001 = -(ct**2) * st * sp * cp * (cp - sp)
    t_011 = st**2 * ct * sp * cp * (cp + sp)
    t_111 = st**3 * (cp**3 - sp**3)
    skewness = np.empty((2, 2, 2))
    skewness[0, 0, 0] = t_000
    skewness[0, 0, 1] = skewness[0, 1, 0] = skewness[1, 0, 0] = t_001
    skewness[0, 1, 1] = skewness[1, 0, 1] = skewness[1, 1, 0] = t_011
    skewness[1, 1, 1] = t_111
    return _sphere_metric(np.array([theta, phi])), skewness


def sphere_geodesic_distance(q_in: np.ndarray, q_fin: np.ndarray) -> float:
    """Great-circle distance arccos(x_in · x_fin) through the immersion."""
    cosine = float(_sphere_map(np.asarray(q_in, float)) @ _sphere_map(np.asarray(q_fin, float)))
    return math.acos(max(-1.0, min(1.0, cosine)))


def sphere_round_potential(q_in: np.ndarray, q_fin: np.ndarray, alpha: float) -> float:
    """½ d² on the round sphere (T ≡ 0, so α plays no role)."""
    return 0.5 * sphere_geodesic_distance(q_in, q_fin) ** 2


def _exponential_oracle(q_in: np.ndarray, q_fin: np.ndarray, alpha: float) -> float:
    return closed_form_potential_exponential(float(q_in[0]), float(q_fin[0]), alpha)


def _exponential_log_oracle(q_in: np.ndarray, q_fin: np.ndarray, alpha: float) -> float:
    r = float(q_fin[0]) - float(q_in[0])
    return r**2 / 2.0 - alpha / 3.0 * r**3


def _kl_oracle(q_in: np.ndarray, q_fin: np.ndarray, alpha: float) -> float:
    delta = float(q_fin[0]) - float(q_in[0])
    return math.expm1(delta) - delta


# ═══════════════════════════════════════════════════
# Registry
# ═══════════════════════════════════════════════════


BUILTIN_MODELS: dict[str, ModelFactory] = {
    "exponential1d": exponential_model,
    "exponential-log": exponential_log_model,
    "kl-free": kl_free_model,
    "euclidean-cubic-r3": euclidean_cubic_model,
    "sphere-pullback": sphere_pullback_model,
    "sphere-round": sphere_round_model,
}

POTENTIAL_ORACLES: dict[str, PotentialOracle] = {
    "exponential1d": _exponential_oracle,
    "exponential-log": _exponential_log_oracle,
    "kl-free": _kl_oracle,
    "euclidean-cubic-r3": euclidean_cubic_potential,
    "sphere-round": sphere_round_potential,
}

_registry: dict[str, ModelFactory] = dict(BUILTIN_MODELS)


def register_model(name: str, factory: ModelFactory, replace: bool = False) -> None:
    """Register a user model factory under a name."""
    if name in _registry and not replace:
        raise ValueError(f"model {name!r} is already registered")
    _registry[name] = factory


def available_models() -> list[str]:
    return sorted(_registry)


def get_model(name: str) -> ManifoldModel:
    """Build a registered model by name.

    Raises:
        UnknownModel: the name is not registered.
    """
    try:
        factory = _registry[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; available: {', '.join(available_models())}"
        ) from None
    return factory()


def potential_oracle(name: str) -> PotentialOracle | None:
    """Closed-form S_α for a builtin model, when one exists."""
    return POTENTIAL_ORACLES.get(name)


def load_model_spec(source: str | Path | Mapping[str, Any]) -> ManifoldModel:
    """Build a model from a specification file or mapping.

    Format: {"dim": n, "domain": [[lo, hi], ...], "model": "<builtin>"};
    null bounds are unbounded. The domain may only shrink the builtin one.

    Raises:
        ConfigError: unreadable or invalid specification.
        UnknownModel: the named model is not registered.
    """
    if isinstance(source, Mapping):
        raw: Any = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read model specification {source}: {exc}") from exc
    try:
        spec = ModelSpec.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid model specification: {exc}") from exc
    model = get_model(spec.model)
    if spec.dim != model.dim:
        raise ConfigError(
            f"model {spec.model!r} has dim={model.dim}, specification says {spec.dim}"
        )
    try:
        return model.restricted(spec.bounds())
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
