"""
Dynamics on the tangent bundle.

The cubic Lagrangian 𝔏_α(q, v) = ½ g_jk v^j v^k + (α/6) T_jkl v^j v^k v^l,
its canonical momenta and energy, the Euler–Lagrange acceleration, and
fixed-step RK4 integration over t ∈ [0, 1].

Models carrying a raw Lagrangian (ManifoldModel.lagrangian) replace 𝔏_α
and ignore α; their Euler–Lagrange equations are assembled from central
differences of the supplied function.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hamilton_potential.errors import DomainError, SingularMassMatrix
from hamilton_potential.geometry import ManifoldModel, alpha_connection, christoffel_first_kind
from hamilton_potential.utils.finite_diff import gradient, tensor_product_partial
from hamilton_potential.utils.io import format_float

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 200

# |det M| < SINGULAR_RATIO·|det g| means the cubic term dominates the kinetic one
SINGULAR_RATIO = 1e-12

# Velocity-space step for raw-Lagrangian derivatives
RAW_STEP = 1e-4

ENERGY_DRIFT_WARNING = 1e-8

Acceleration = Callable[[ManifoldModel, float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TangentState:
    """A point-velocity pair (q, v) on Tℳ."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if q.shape != v.shape:
            raise ValueError(f"q has {q.size} coordinates but v has {v.size}")
        q.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled solution on t ∈ [0, 1].

    t has shape (N+1,), q and v have shape (N+1, n). energy is None for
    connection geodesics, which have no Lagrangian energy to conserve.
    """

    model: ManifoldModel
    alpha: float
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    energy: np.ndarray | None
    energy_drift: float | None

    @property
    def steps(self) -> int:
        return int(self.t.size - 1)

    @property
    def samples(self) -> list[tuple[float, TangentState]]:
        return [(float(t), TangentState(q, v)) for t, q, v in zip(self.t, self.q, self.v)]

    @property
    def start(self) -> TangentState:
        return TangentState(self.q[0], self.v[0])

    @property
    def endpoint(self) -> TangentState:
        return TangentState(self.q[-1], self.v[-1])


# ═══════════════════════════════════════════════════
# Lagrangian, momenta, energy
# ═══════════════════════════════════════════════════


def _cubic_lagrangian(model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray) -> float:
    value = 0.5 * float(v @ model.metric_at(q) @ v)
    if alpha != 0.0:
        value += alpha / 6.0 * float(np.einsum("jkl,j,k,l->", model.skewness_at(q), v, v, v))
    return value


def _lagrangian(model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray) -> float:
    if model.lagrangian is not None:
        return float(model.lagrangian(model.check(q), v))
    return _cubic_lagrangian(model, alpha, q, v)


def lagrangian(model: ManifoldModel, alpha: float, state: TangentState) -> float:
    """𝔏_α(q, v), or the model's raw Lagrangian when it has one."""
    return _lagrangian(model, alpha, state.q, state.v)


def lagrangian_function(
    model: ManifoldModel, alpha: float
) -> Callable[[np.ndarray, np.ndarray], float]:
    """The Lagrangian as a plain (q, v) ↦ 𝔏 callable."""

    def evaluate(q: np.ndarray, v: np.ndarray) -> float:
        return _lagrangian(model, alpha, np.asarray(q, dtype=float), np.asarray(v, dtype=float))

    return evaluate


def _momentum(model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    raw = model.lagrangian
    if raw is not None:
        point = model.check(q)
        h = RAW_STEP * max(1.0, float(np.max(np.abs(v), initial=0.0)))
        return gradient(lambda u: float(raw(point, u)), v, h)
    p = model.metric_at(q) @ v
    if alpha != 0.0:
        p = p + 0.5 * alpha * np.einsum("jkl,k,l->j", model.skewness_at(q), v, v)
    return p


def momentum(model: ManifoldModel, alpha: float, state: TangentState) -> np.ndarray:
    """p_j = g_jk v^k + (α/2) T_jkl v^k v^l (∂𝔏/∂v^j for raw Lagrangians)."""
    return _momentum(model, alpha, state.q, state.v)


def _energy(model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray) -> float:
    return float(_momentum(model, alpha, q, v) @ v) - _lagrangian(model, alpha, q, v)


def energy(model: ManifoldModel, alpha: float, state: TangentState) -> float:
    """Legendre energy E = p·v − 𝔏 = ½ g v v + (α/3) T v v v for 𝔏_α."""
    return _energy(model, alpha, state.q, state.v)


def mass_matrix(model: ManifoldModel, alpha: float, state: TangentState) -> np.ndarray:
    """Effective mass M_jk = g_jk + α T_jkl v^l."""
    g = model.metric_at(state.q)
    if alpha == 0.0:
        return g
    return g + alpha * np.einsum("jkl,l->jk", model.skewness_at(state.q), state.v)


# ═══════════════════════════════════════════════════
# Accelerations
# ═══════════════════════════════════════════════════


def _solve_mass(mass: np.ndarray, rhs: np.ndarray, reference: np.ndarray, where: str) -> np.ndarray:
    det_mass = abs(float(np.linalg.det(mass)))
    if det_mass < SINGULAR_RATIO * abs(float(np.linalg.det(reference))):
        raise SingularMassMatrix(
            f"effective mass matrix is singular at {where} (|det M|={det_mass:.3e})"
        )
    return np.linalg.solve(mass, rhs)


def _raw_acceleration(model: ManifoldModel, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Solve H v̇ = ∂𝔏/∂q − (∂²𝔏/∂v∂q) v with H = ∂²𝔏/∂v∂v by central differences."""
    q = model.check(q)
    n = model.dim
    raw = model.lagrangian
    assert raw is not None

    def joined(z: np.ndarray) -> float:
        return float(raw(z[:n], z[n:]))

    z = np.concatenate([q, v])
    basis = np.eye(2 * n)
    h = RAW_STEP * max(1.0, float(np.max(np.abs(z))))
    hess_vv = np.empty((n, n))
    mixed_vq = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            hess_vv[j, k] = tensor_product_partial(joined, z, [basis[n + j], basis[n + k]], h)
            mixed_vq[j, k] = tensor_product_partial(joined, z, [basis[n + j], basis[k]], h)
    grad_q = gradient(lambda x: float(raw(x, v)), q, h)
    rhs = grad_q - mixed_vq @ v
    where = f"q={q.tolist()}, v={v.tolist()}"
    return _solve_mass(hess_vv, rhs, np.eye(n), where)


def _el_acceleration(
    model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray
) -> np.ndarray:
    if model.lagrangian is not None:
        return _raw_acceleration(model, q, v)
    q = model.check(q)
    g = model.metric_at(q)
    gamma = christoffel_first_kind(model, q)
    rhs = -np.einsum("jkl,k,l->j", gamma, v, v)
    mass = g
    if alpha != 0.0:
        mass = g + alpha * np.einsum("jkl,l->jk", model.skewness_at(q), v)
        dt = model.skewness_gradient_at(q)
        bracket = (
            np.einsum("jklm,k,l,m->j", dt, v, v, v)  # ∂_m T_jkl
            + np.einsum("jlmk,k,l,m->j", dt, v, v, v)  # ∂_k T_jlm
            + np.einsum("jkml,k,l,m->j", dt, v, v, v)  # ∂_l T_jkm
            - np.einsum("klmj,k,l,m->j", dt, v, v, v)  # ∂_j T_klm
        )
        rhs = rhs - alpha / 6.0 * bracket
    return _solve_mass(mass, rhs, g, f"q={q.tolist()}, v={v.tolist()}")


def el_acceleration(model: ManifoldModel, alpha: float, state: TangentState) -> np.ndarray:
    """Euler–Lagrange acceleration v̇ of 𝔏_α at a tangent state.

    Solves (g_jk + α T_jkl v^l) v̇^k = −_gΓ_jkl v^k v^l
    − (α/6)(∂_m T_jkl + ∂_k T_jlm + ∂_l T_jkm − ∂_j T_klm) v^k v^l v^m.

    Raises:
        SingularMassMatrix: |det M| < 1e-12·|det g|.
        DomainError: q outside the model domain.
    """
    return _el_acceleration(model, alpha, state.q, state.v)


def _connection_acceleration(
    model: ManifoldModel, alpha: float, q: np.ndarray, v: np.ndarray
) -> np.ndarray:
    second = alpha_connection(model, q, alpha).second_kind
    return -np.einsum("jkl,k,l->j", second, v, v)


def connection_acceleration(model: ManifoldModel, alpha: float, state: TangentState) -> np.ndarray:
    """Geodesic acceleration of ∇^α: v̇^j = −_αΓ^j_kl v^k v^l."""
    return _connection_acceleration(model, alpha, state.q, state.v)


# ═══════════════════════════════════════════════════
# Integration
# ═══════════════════════════════════════════════════


def _rk4(
    model: ManifoldModel,
    alpha: float,
    initial: TangentState,
    steps: int,
    accel: Acceleration,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    q = model.check(initial.q)
    v = np.array(initial.v, dtype=float)
    dt = 1.0 / steps
    t = np.linspace(0.0, 1.0, steps + 1)
    qs = np.empty((steps + 1, model.dim))
    vs = np.empty((steps + 1, model.dim))
    qs[0], vs[0] = q, v
    for i in range(steps):
        try:
            k1q, k1v = v, accel(model, alpha, q, v)
            k2q = v + 0.5 * dt * k1v
            k2v = accel(model, alpha, q + 0.5 * dt * k1q, k2q)
            k3q = v + 0.5 * dt * k2v
            k3v = accel(model, alpha, q + 0.5 * dt * k2q, k3q)
            k4q = v + dt * k3v
            k4v = accel(model, alpha, q + dt * k3q, k4q)
        except DomainError as exc:
            raise DomainError(f"trajectory left the domain after t={t[i]:.6g}: {exc}") from exc
        q = q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not model.contains(q):
            raise DomainError(
                f"{model.name}: trajectory left the domain at t={t[i + 1]:.6g} (q={q.tolist()})"
            )
        qs[i + 1], vs[i + 1] = q, v
    for array in (t, qs, vs):
        array.setflags(write=False)
    return t, qs, vs


def integrate(
    model: ManifoldModel,
    alpha: float,
    initial: TangentState,
    steps: int = DEFAULT_STEPS,
) -> Trajectory:
    """Integrate the Euler–Lagrange flow of 𝔏_α with classical RK4 over [0, 1].

    Raises:
        DomainError: the trajectory leaves the domain.
        SingularMassMatrix: propagated from el_acceleration.
    """
    t, qs, vs = _rk4(model, alpha, initial, steps, _el_acceleration)
    energies = np.array([_energy(model, alpha, q, v) for q, v in zip(qs, vs)])
    energies.setflags(write=False)
    drift = float(np.max(np.abs(energies - energies[0])))
    if drift > ENERGY_DRIFT_WARNING * max(1.0, abs(float(energies[0]))):
        logger.warning("energy drift %.3e on %s with %d steps", drift, model.name, steps)
    return Trajectory(model, alpha, t, qs, vs, energies, drift)


def integrate_geodesic(
    model: ManifoldModel,
    alpha: float,
    initial: TangentState,
    steps: int = DEFAULT_STEPS,
) -> Trajectory:
    """Integrate the geodesic equation of the α-connection with RK4 over [0, 1]."""
    t, qs, vs = _rk4(model, alpha, initial, steps, _connection_acceleration)
    return Trajectory(model, alpha, t, qs, vs, None, None)


def write_trajectory_csv(trajectory: Trajectory, path: str | Path) -> Path:
    """Write samples as CSV with header t,q1..qn,v1..vn,E."""
    n = trajectory.q.shape[1]
    header = ["t", *(f"q{j + 1}" for j in range(n)), *(f"v{j + 1}" for j in range(n)), "E"]
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i, t in enumerate(trajectory.t):
            e = None if trajectory.energy is None else float(trajectory.energy[i])
            writer.writerow(
                [
                    format_float(t),
                    *(format_float(x) for x in trajectory.q[i]),
                    *(format_float(x) for x in trajectory.v[i]),
                    format_float(e),
                ]
            )
    return target
