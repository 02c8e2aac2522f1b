"""
Geometry core: chart-level statistical manifolds (ℳ, g, T).

Provides the ManifoldModel description, Christoffel symbols of both kinds,
the α-connection family _αΓ = _gΓ − (α/2)T, and pullbacks of covariant
tensors along immersions.

Index conventions (dense row-major arrays, n ≤ 4 in practice):
  - g[j, k]                 metric
  - T[j, k, l]              skewness tensor, totally symmetric
  - first_kind[j, k, l]     _Γ_jkl, symmetric in (k, l)
  - second_kind[j, k, l]    _Γ^j_kl = g^{jm} _Γ_mkl
  - derivatives are appended LAST: dT[j, k, l, m] = ∂_m T_jkl
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from hamilton_potential.errors import DegeneratePullback, DomainError
from hamilton_potential.utils.finite_diff import central_jacobian

Bounds = tuple[float, float]
TensorField = Callable[[np.ndarray], np.ndarray]
RawLagrangian = Callable[[np.ndarray, np.ndarray], float]

# Smallest/largest singular value ratio below which an immersion is degenerate
RANK_TOLERANCE = 1e-10


def _zero_field(shape: tuple[int, ...]) -> TensorField:
    def field(q: np.ndarray) -> np.ndarray:
        return np.zeros(shape)

    return field


@dataclass(frozen=True)
class ManifoldModel:
    """A statistical manifold (ℳ, g, T) in a single chart.

    Attributes:
        name: registry name or a descriptive label
        dim: chart dimension n
        domain: open interval (lo, hi) per coordinate; ±inf for unbounded
        metric: q ↦ g_jk(q), symmetric positive-definite n×n
        skewness: q ↦ T_jkl(q), totally symmetric n×n×n
        christoffel_first: optional analytic q ↦ _gΓ_jkl(q)
        skewness_gradient: optional analytic q ↦ ∂_m T_jkl(q) (index m last)
        lagrangian: optional raw Lagrangian (q, v) ↦ 𝔏 replacing the cubic 𝔏_α
        boundary_margin: points closer than this to a finite bound are rejected
    """

    name: str
    dim: int
    domain: tuple[Bounds, ...]
    metric: TensorField
    skewness: TensorField
    christoffel_first: TensorField | None = None
    skewness_gradient: TensorField | None = None
    lagrangian: RawLagrangian | None = None
    boundary_margin: float = 0.0
    description: str = ""

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if len(self.domain) != self.dim:
            raise ValueError(f"domain has {len(self.domain)} intervals for dim={self.dim}")
        for j, (lo, hi) in enumerate(self.domain):
            if not lo < hi:
                raise ValueError(f"empty domain interval for coordinate {j}: ({lo}, {hi})")

    def contains(self, q: np.ndarray) -> bool:
        """True when q lies inside the open domain (respecting boundary_margin)."""
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,) or not np.all(np.isfinite(q)):
            return False
        for x, (lo, hi) in zip(q, self.domain):
            if not (lo + self.boundary_margin < x < hi - self.boundary_margin):
                return False
        return True

    def check(self, q: Sequence[float] | np.ndarray) -> np.ndarray:
        """Return q as a float array, rejecting points outside the domain."""
        point = np.asarray(q, dtype=float).reshape(-1)
        if point.shape != (self.dim,):
            raise DomainError(f"{self.name}: expected {self.dim} coordinates, got {point.size}")
        if not self.contains(point):
            raise DomainError(
                f"{self.name}: point {point.tolist()} is outside the domain {list(self.domain)}"
                + (f" (margin {self.boundary_margin})" if self.boundary_margin else "")
            )
        return point

    def metric_at(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self.metric(self.check(q)), dtype=float).reshape(self.dim, self.dim)

    def skewness_at(self, q: np.ndarray) -> np.ndarray:
        n = self.dim
        return np.asarray(self.skewness(self.check(q)), dtype=float).reshape(n, n, n)

    def skewness_gradient_at(self, q: np.ndarray) -> np.ndarray:
        """∂_m T_jkl at q, analytic when available, else central differences."""
        point = self.check(q)
        n = self.dim
        if self.skewness_gradient is not None:
            return np.asarray(self.skewness_gradient(point), dtype=float).reshape(n, n, n, n)
        return central_jacobian(self.skewness, point, self.contains)

    def widths(self) -> np.ndarray:
        """Domain width per coordinate (inf when unbounded)."""
        return np.array([hi - lo for lo, hi in self.domain], dtype=float)

    def self_dual(self) -> ManifoldModel:
        """The same (ℳ, g) with T ≡ 0 and no raw Lagrangian."""
        n = self.dim
        return replace(
            self,
            name=f"{self.name}[T=0]",
            skewness=_zero_field((n, n, n)),
            skewness_gradient=_zero_field((n, n, n, n)),
            lagrangian=None,
        )

    def restricted(self, domain: Sequence[Bounds]) -> ManifoldModel:
        """A copy whose domain is shrunk to the given intervals."""
        bounds = tuple((float(lo), float(hi)) for lo, hi in domain)
        if len(bounds) != self.dim:
            raise ValueError(f"domain has {len(bounds)} intervals for dim={self.dim}")
        for j, ((lo, hi), (base_lo, base_hi)) in enumerate(zip(bounds, self.domain)):
            if lo < base_lo or hi > base_hi:
                raise DomainError(
                    f"{self.name}: interval {j} ({lo}, {hi}) exceeds the model domain "
                    f"({base_lo}, {base_hi})"
                )
        return replace(self, domain=bounds)


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Christoffel symbols of a torsionless connection at a point."""

    first_kind: np.ndarray
    second_kind: np.ndarray
    point: np.ndarray


def raise_index(metric: np.ndarray, first_kind: np.ndarray) -> np.ndarray:
    """_Γ^j_kl = Σ_m g^{jm} _Γ_mkl."""
    n = metric.shape[0]
    return np.linalg.solve(metric, first_kind.reshape(n, n * n)).reshape(n, n, n)


def lower_index(metric: np.ndarray, second_kind: np.ndarray) -> np.ndarray:
    """_Γ_jkl = Σ_m g_jm _Γ^m_kl."""
    return np.einsum("jm,mkl->jkl", metric, second_kind)


def christoffel_first_kind(model: ManifoldModel, q: np.ndarray) -> np.ndarray:
    """_gΓ_jkl = ½(∂_k g_jl + ∂_l g_jk − ∂_j g_kl) as a bare array."""
    point = model.check(q)
    n = model.dim
    if model.christoffel_first is not None:
        return np.asarray(model.christoffel_first(point), dtype=float).reshape(n, n, n)
    dg = central_jacobian(model.metric, point, model.contains)
    return 0.5 * (
        np.einsum("jlk->jkl", dg) + np.einsum("jkl->jkl", dg) - np.einsum("klj->jkl", dg)
    )


def levi_civita_first(model: ManifoldModel, q: np.ndarray) -> ConnectionCoefficients:
    """Levi-Civita Christoffel symbols of the model's metric at q.

    Uses the model's analytic symbols when supplied, otherwise central
    differences of g with the geometry-core step policy.

    Raises:
        DomainError: q outside the domain, or no admissible stencil.
    """
    point = model.check(q)
    first = christoffel_first_kind(model, point)
    return ConnectionCoefficients(
        first_kind=first,
        second_kind=raise_index(model.metric_at(point), first),
        point=point,
    )


def levi_civita_second(model: ManifoldModel, q: np.ndarray) -> np.ndarray:
    """_gΓ^j_kl, the raised Levi-Civita symbols."""
    return levi_civita_first(model, q).second_kind


def alpha_connection(model: ManifoldModel, q: np.ndarray, alpha: float) -> ConnectionCoefficients:
    """Christoffel symbols of ∇^α: _αΓ_jkl = _gΓ_jkl − (α/2) T_jkl."""
    point = model.check(q)
    first = christoffel_first_kind(model, point)
    if alpha != 0.0:
        first = first - 0.5 * alpha * model.skewness_at(point)
    return ConnectionCoefficients(
        first_kind=first,
        second_kind=raise_index(model.metric_at(point), first),
        point=point,
    )


# ═══════════════════════════════════════════════════
# Immersions and pullbacks
# ═══════════════════════════════════════════════════


@dataclass(frozen=True)
class Immersion:
    """A map x: ℳ → ℝ^N, q ↦ x(q), used to pull covariant tensors back.

    jacobian[a, j] = ∂x^a/∂q^j and hessian[a, j, k] = ∂²x^a/∂q^j∂q^k are
    optional analytic closures; otherwise they come from central differences.
    """

    source_dim: int
    target_dim: int
    map: TensorField
    jacobian: TensorField | None = None
    hessian: TensorField | None = None
    name: str = ""

    def point(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self.map(np.asarray(q, dtype=float)), dtype=float)

    def jacobian_at(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian(q), dtype=float)
        else:
            jac = central_jacobian(self.map, q)
        return jac.reshape(self.target_dim, self.source_dim)

    def hessian_at(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.hessian is not None:
            hess = np.asarray(self.hessian(q), dtype=float)
        else:
            hess = central_jacobian(self.jacobian_at, q)
        return hess.reshape(self.target_dim, self.source_dim, self.source_dim)


def check_rank(jacobian: np.ndarray, q: np.ndarray) -> None:
    """Raise DegeneratePullback unless the Jacobian has full column rank."""
    singular = np.linalg.svd(jacobian, compute_uv=False)
    if singular.size == 0 or singular[-1] <= RANK_TOLERANCE * max(1.0, float(singular[0])):
        raise DegeneratePullback(
            f"immersion Jacobian is rank deficient at q={np.asarray(q).tolist()} "
            f"(singular values {singular.tolist()})"
        )


def pullback(
    immersion: Immersion,
    ambient_metric: TensorField,
    ambient_skewness: TensorField,
    q: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Pull g and T back along an immersion.

    (i*g)_jk = Σ g_ab J^a_j J^b_k and (i*T)_jkl = Σ T_abc J^a_j J^b_k J^c_l.

    Raises:
        DegeneratePullback: the Jacobian is rank deficient at q.
    """
    q = np.asarray(q, dtype=float)
    jac = immersion.jacobian_at(q)
    check_rank(jac, q)
    x = immersion.point(q)
    metric = np.einsum("ab,aj,bk->jk", ambient_metric(x), jac, jac)
    skewness = np.einsum("abc,aj,bk,cl->jkl", ambient_skewness(x), jac, jac, jac)
    return metric, skewness


def pullback_model(
    ambient: ManifoldModel,
    immersion: Immersion,
    domain: Sequence[Bounds],
    name: str,
    christoffel_first: TensorField | None = None,
    boundary_margin: float = 0.0,
    description: str = "",
) -> ManifoldModel:
    """A ManifoldModel on the source chart carrying i*g and i*T.

    ∂(i*T) combines the ambient ∂T with the immersion's second derivatives.
    """
    if immersion.target_dim != ambient.dim:
        raise ValueError(
            f"immersion targets dimension {immersion.target_dim}, ambient model has {ambient.dim}"
        )

    def metric(q: np.ndarray) -> np.ndarray:
        jac = immersion.jacobian_at(q)
        check_rank(jac, q)
        return np.einsum("ab,aj,bk->jk", ambient.metric_at(immersion.point(q)), jac, jac)

    def skewness(q: np.ndarray) -> np.ndarray:
        jac = immersion.jacobian_at(q)
        return np.einsum(
            "abc,aj,bk,cl->jkl", ambient.skewness_at(immersion.point(q)), jac, jac, jac
        )

    def skewness_gradient(q: np.ndarray) -> np.ndarray:
        x = immersion.point(q)
        jac = immersion.jacobian_at(q)
        hess = immersion.hessian_at(q)
        t_amb = ambient.skewness_at(x)
        dt_amb = ambient.skewness_gradient_at(x)
        return (
            np.einsum("abcd,dm,aj,bk,cl->jklm", dt_amb, jac, jac, jac, jac)
            + np.einsum("abc,ajm,bk,cl->jklm", t_amb, hess, jac, jac)
            + np.einsum("abc,aj,bkm,cl->jklm", t_amb, jac, hess, jac)
            + np.einsum("abc,aj,bk,clm->jklm", t_amb, jac, jac, hess)
        )

    return ManifoldModel(
        name=name,
        dim=immersion.source_dim,
        domain=tuple((float(lo), float(hi)) for lo, hi in domain),
        metric=metric,
        skewness=skewness,
        christoffel_first=christoffel_first,
        skewness_gradient=skewness_gradient,
        boundary_margin=boundary_margin,
        description=description,
    )


def is_totally_symmetric(tensor: np.ndarray, atol: float = 1e-12) -> bool:
    """True when a rank-3 tensor is invariant under every index permutation."""
    return all(
        np.allclose(tensor, np.transpose(tensor, perm), atol=atol)
        for perm in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    )


def is_positive_definite(metric: np.ndarray) -> bool:
    """True for a symmetric matrix with a Cholesky factorization."""
    if not np.allclose(metric, metric.T, atol=1e-12 * max(1.0, float(np.max(np.abs(metric))))):
        return False
    try:
        np.linalg.cholesky(metric)
    except np.linalg.LinAlgError:
        return False
    return True


def unbounded(dim: int) -> tuple[Bounds, ...]:
    """The whole ℝⁿ as a domain."""
    return tuple((-math.inf, math.inf) for _ in range(dim))
