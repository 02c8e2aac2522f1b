"""
Pydantic v2 models for run configuration, model specifications and reports.
"""

from __future__ import annotations

import math
import os
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

Command = Literal["potential", "recover", "fisher", "kl", "scan", "verify"]
OutputFormat = Literal["csv", "json"]


def default_workers() -> int:
    """Worker count from HAMILTON_POTENTIAL_WORKERS, defaulting to 1."""
    try:
        return max(1, int(os.environ.get("HAMILTON_POTENTIAL_WORKERS", "1")))
    except ValueError:
        return 1


class ModelSpec(BaseModel):
    """Model specification file: a builtin model on a (possibly shrunk) domain."""

    model_config = ConfigDict(extra="forbid")

    dim: int = Field(ge=1, description="Chart dimension n")
    domain: list[tuple[float | None, float | None]] = Field(
        description="Open interval per coordinate; null for an unbounded side"
    )
    model: str = Field(description="Builtin model name")

    @model_validator(mode="after")
    def _domain_matches_dim(self) -> ModelSpec:
        if len(self.domain) != self.dim:
            raise ValueError(f"domain has {len(self.domain)} intervals for dim={self.dim}")
        return self

    def bounds(self) -> list[tuple[float, float]]:
        return [
            (-math.inf if lo is None else lo, math.inf if hi is None else hi)
            for lo, hi in self.domain
        ]


class GridAxis(BaseModel):
    """One coordinate of a scan grid: n evenly spaced values from lo to hi."""

    lo: float
    hi: float
    n: int = Field(ge=1)

    @classmethod
    def parse(cls, text: str) -> GridAxis:
        """Parse 'lo:hi:n'."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid axis must look like lo:hi:n, got {text!r}")
        return cls(lo=float(parts[0]), hi=float(parts[1]), n=int(parts[2]))

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.lo, self.hi, self.n)]


class VerifyTolerances(BaseModel):
    """Pass/fail thresholds used by the verify command."""

    metric: float = Field(default=1e-4, gt=0)
    gamma_first: float = Field(default=5e-3, gt=0)
    skewness: float = Field(default=5e-3, gt=0)
    potential: float = Field(default=1e-5, gt=0, description="Oracle delta for S")


class RunConfig(BaseModel):
    """A batch run. Flags override values read from a --config JSON file."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    model: str = Field(default="exponential1d", description="Builtin name or model-spec path")
    density: str = Field(default="exponential", description="Density for fisher and kl")
    alpha: float = 0.0
    points: list[list[float]] = Field(
        default_factory=list, description="Points for recover/fisher/verify; q_in for scan"
    )
    pairs: list[tuple[list[float], list[float]]] = Field(
        default_factory=list, description="(q_in, q_fin) pairs for potential/kl/verify"
    )
    grid: list[GridAxis] = Field(default_factory=list, description="q_fin axes for scan")
    steps: int = Field(default=200, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    fd_step: float | None = Field(default=None, gt=0)
    out: str | None = None
    format: OutputFormat = "csv"
    keep_going: bool = False
    workers: int = Field(default_factory=default_workers, ge=1)
    tolerances: VerifyTolerances = Field(default_factory=VerifyTolerances)

    @model_validator(mode="after")
    def _check_shapes(self) -> RunConfig:
        for q_in, q_fin in self.pairs:
            if len(q_in) != len(q_fin):
                raise ValueError(f"pair {q_in} -> {q_fin} mixes dimensions")
        if self.command == "scan":
            if len(self.points) != 1:
                raise ValueError("scan needs exactly one --point (the fixed q_in)")
            if len(self.grid) != len(self.points[0]):
                raise ValueError(
                    f"scan needs one --grid axis per coordinate, got {len(self.grid)} "
                    f"for a {len(self.points[0])}-dimensional point"
                )
        return self


# ═══════════════════════════════════════════════════
# Reports
# ═══════════════════════════════════════════════════


class ErrorPayload(BaseModel):
    """Error object emitted at the command-line boundary."""

    error: str
    details: dict[str, object] = Field(default_factory=dict)


class PotentialRow(BaseModel):
    """One evaluated pair; failed rows carry an error message instead of S."""

    q_in: list[float]
    q_fin: list[float]
    S: float | None = None
    residual: float | None = None
    quadrature_error: float | None = None
    iterations: int | None = None
    error: str | None = None


class KLRow(BaseModel):
    xi_in: list[float]
    xi_fin: list[float]
    kl: float | None = None
    error: str | None = None


class TensorRow(BaseModel):
    """One tensor component in long format."""

    point: list[float]
    tensor: str
    index: list[int]
    value: float | None
    expected: float | None = None
    error: str | None = None


class TensorErrors(BaseModel):
    """Max-abs differences between recovered and analytic tensors."""

    metric: float
    gamma_first: float
    skewness: float | None = None


class RecoveryReport(BaseModel):
    model: str
    source: str = Field(description="hamilton, expmap or contrast")
    point: list[float]
    alpha: float | None
    step: float
    second_step: float
    metric: list[list[float]]
    gamma_first: list[list[list[float]]]
    skewness: list[list[list[float]]] | None = Field(
        default=None, description="null when α = 0"
    )
    third_fin_fin_in: list[list[list[float]]]
    third_in_in_fin: list[list[list[float]]]
    metric_condition: float
    errors_vs_model: TensorErrors | None = None


class CheckResult(BaseModel):
    name: str
    error: float | None = Field(default=None, description="Observed max-abs deviation")
    tolerance: float
    passed: bool
    detail: str = ""


class VerifyReport(BaseModel):
    model: str
    alpha: float
    checks: list[CheckResult] = Field(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
