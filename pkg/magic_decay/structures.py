"""Report and configuration models shared by the library and the CLI."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import settings


class Provenance(BaseModel):
    formulas: Dict[str, str] = Field(default_factory=dict)
    basis_checksum: str | None = None
    feasibility_tol: float = settings.LP_FEASIBILITY_TOL
    report_tol: float = settings.REPORT_TOL
    backend: str | None = None
    m_d: float | None = None


class RunConfig(BaseModel):
    """Validated options for one CLI invocation."""

    command: str
    state: str | None = None
    file: Path | None = None
    n: int | None = Field(default=None, ge=1)
    noise: str | None = None
    grid_start: float = 0.0
    grid_stop: float = 1.0
    points: int = 11
    epsilon: float = Field(default=0.0, ge=0.0)
    tol: float = Field(default=1e-4, gt=0.0)
    cache_dir: Path | None = None
    output: Path | None = None
    format: Literal["csv", "json"] = "csv"
    threads: int = Field(default=settings.THREADS, ge=1)
    allow_n5: bool = settings.ALLOW_N5

    @field_validator("grid_start", "grid_stop")
    @classmethod
    def _in_unit_interval(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("grid bounds must lie in [0, 1]")
        return value

    @field_validator("points")
    @classmethod
    def _enough_points(cls, value: int) -> int:
        if value < 2:
            raise ValueError("a sweep needs at least 2 grid points")
        return value

    @model_validator(mode="after")
    def _ordered(self) -> "RunConfig":
        if self.grid_start > self.grid_stop:
            raise ValueError("grid start must not exceed grid stop")
        return self

    def grid(self) -> List[float]:
        return [round(float(v), 12) for v in np.linspace(self.grid_start, self.grid_stop, self.points)]


class RomReport(BaseModel):
    state: str
    n: int
    noise: str | None = None
    value: float
    negative_mass: float
    support_size: int
    dual_value: float
    duality_gap: float
    reconstruction_error: float
    backend: str
    iterations: int
    provenance: Provenance = Field(default_factory=Provenance)


class ThresholdReport(BaseModel):
    state: str
    n: int
    noise: str
    epsilon: float
    lambda_star: float
    bracket: List[float]
    evaluations: int
    monotone: bool = True
    provenance: Provenance = Field(default_factory=Provenance)


class SweepRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(..., alias="lambda")
    lb_D: float | None = None
    ub_convexity: float | None = None
    ub_family_specific: float | None = None
    rom_exact: float | None = None


class BoundProfile(BaseModel):
    """Upper and lower bounds for one family on a λ grid."""

    family: str
    n: int
    rows: List[SweepRow]
    provenance: Provenance = Field(default_factory=Provenance)

    @model_validator(mode="after")
    def _sandwich(self) -> "BoundProfile":
        for row in self.rows:
            uppers = [u for u in (row.ub_convexity, row.ub_family_specific) if u is not None]
            if row.lb_D is not None and uppers and min(uppers) < row.lb_D - 1e-6:
                raise ValueError(f"upper bound below lower bound at lambda={row.lam}")
        return self


class CertificateRow(BaseModel):
    lam: float
    best: str
    max_alpha: float
    rom: float | None = None
    difference: float | None = None
    ok: bool = True


class CertificateReport(BaseModel):
    rows: List[CertificateRow]
    feasibility: Dict[str, float]
    tolerance: float
    ok: bool


class CapacityReport(BaseModel):
    gate: str
    n: int
    noise: str | None = None
    value: float | None = None
    inputs: int
    distinct_outputs: int
    vanishing_point: float | None = None


class WignerRow(BaseModel):
    n: int
    d: int
    lam: float
    sn: float
    rom_lb: float
    rom_ub: float | None = None
    provenance: Provenance | None = None


class LocalMagicRow(BaseModel):
    name: str
    n: int
    k: int
    marginal_rom: float | None = None
    marginal_D: float | None = None
    m_k_bound: float | None = None
    lambda_star: float | None = None
    lambda_lb: float | None = None
    consistent: bool = True
    note: str | None = None
