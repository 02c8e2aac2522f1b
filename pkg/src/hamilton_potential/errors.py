"""
Exception hierarchy for hamilton-potential.

Every numerical failure the engine can signal has its own type so callers
(and the CLI) can tell a domain violation from a solver that did not
converge. All errors derive from HamiltonPotentialError.
"""

from __future__ import annotations


class HamiltonPotentialError(Exception):
    """Base class for all errors raised by the engine."""


class DomainError(HamiltonPotentialError, ValueError):
    """A point, a finite-difference stencil or a trajectory left the open chart domain."""


class SingularMassMatrix(HamiltonPotentialError, ArithmeticError):
    """The effective mass matrix g + αT·v is (numerically) singular at a state."""


class NoConvergence(HamiltonPotentialError, ArithmeticError):
    """An iterative solver exhausted its iteration or step-size budget."""


class SingularShootingJacobian(HamiltonPotentialError, ArithmeticError):
    """The shooting Jacobian ∂q(1)/∂v_in is singular (conjugate-point symptom)."""


class QuadratureNotConverged(HamiltonPotentialError, ArithmeticError):
    """A quadrature did not reach its tolerance under refinement."""


class DegeneratePullback(HamiltonPotentialError, ArithmeticError):
    """The immersion Jacobian lost rank, so the pulled-back metric is degenerate."""


class SkewnessUnavailable(HamiltonPotentialError, ArithmeticError):
    """The skewness tensor cannot be extracted (α = 0 makes the extraction divide by zero)."""


class NormalizationError(HamiltonPotentialError, ValueError):
    """A parametric density does not integrate to one."""


class SupportMismatch(HamiltonPotentialError, ValueError):
    """Two densities are not mutually absolutely continuous on the sample domain."""


class UnknownModel(HamiltonPotentialError, ValueError):
    """A builtin model or density name is not registered."""


class ConfigError(HamiltonPotentialError, ValueError):
    """A run configuration or model specification file is invalid."""
