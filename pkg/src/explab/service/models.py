"""Request/response schemas of the compute service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from ..config import GroupSpec, HomSpec


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeltaRequest(_Request):
    group: GroupSpec = GroupSpec()
    L: int = 10
    method: Literal["pressure", "counting"] = "pressure"
    tol: float = 1e-4
    bin_width: float = 0.5
    window: Optional[tuple[float, float]] = None
    workers: Optional[int] = None


class SubgroupDeltaRequest(_Request):
    group: GroupSpec = GroupSpec()
    hom: HomSpec = HomSpec()
    L: int = 10
    bin_width: float = 0.5
    window: Optional[tuple[float, float]] = None
    workers: Optional[int] = None


class DeltaResponse(BaseModel):
    value: float
    method: str
    cutoff: int
    residual: float
    bracket: tuple[float, float]
    diagnostics: dict


class VerifyRequest(_Request):
    group: GroupSpec = GroupSpec()
    hom: HomSpec = HomSpec()
    h0: str = "abAB"
    checks: Optional[list[str]] = None  # None -> the four lemma audits
    L: int = 10
    s: float = 0.5
    n_window: int = 20
    samples: int = 10_000
    seed: int = 0
    coset_L: Optional[int] = None
    theorem_L: Optional[int] = None
    workers: Optional[int] = None


class CheckReportModel(BaseModel):
    name: str
    cases: int
    worst_slack: float
    params: dict
    passed: bool
    tolerance: float
    witness: Optional[str]
    notes: str


class VerifyResponse(BaseModel):
    checks: dict[str, CheckReportModel]
    all_passed: bool


class FiberRequest(_Request):
    group: GroupSpec = GroupSpec()
    hom: HomSpec = HomSpec()
    h0: str = "abAB"
    L: int = 8


class FiberResponse(BaseModel):
    histogram: dict[str, int]
    max_fiber: int
    bound: int
    cosets_scanned: int
    max_length: int
    within_bound: bool


class InjectionRequest(_Request):
    case: Literal["free", "malnormal"] = "free"
    hom: Optional[HomSpec] = HomSpec()
    k: int = 2
    h0: str = "abAB"
    h1: Optional[str] = None
    h2: Optional[str] = None
    L: int = 8
    violation_bound: int = 4


class InjectionResponse(BaseModel):
    case: str
    scanned: int
    max_length: int
    collisions: list[tuple[str, str]]
    kernel_failures: list[str]
    max_image_length: int
    length_formula_violations: int
    injective_on_scan: bool


class OrbitRequest(_Request):
    group: GroupSpec = GroupSpec()
    L: int = 10
    radius: Optional[float] = None


class ReportRequest(_Request):
    group: GroupSpec = GroupSpec()
    hom: HomSpec = HomSpec()
    h0: str = "abAB"
    L: int = 10
    s: float = 0.5
    n_window: int = 20
    samples: int = 10_000
    seed: int = 0
    tol: float = 1e-4
    bin_width: float = 0.5
    window: Optional[tuple[float, float]] = None
    coset_L: Optional[int] = None
    theorem_L: Optional[int] = None
    case: Literal["free", "malnormal"] = "free"
    h1: Optional[str] = None
    h2: Optional[str] = None
    violation_bound: int = 4
    workers: Optional[int] = None


class ReportResponse(BaseModel):
    config: dict
    delta: DeltaResponse
    subgroup_delta: DeltaResponse
    checks: dict[str, CheckReportModel]
    fiber: FiberResponse
    injection: InjectionResponse
    all_passed: bool


class HealthResponse(BaseModel):
    status: str
    version: str
