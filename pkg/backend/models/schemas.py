from datetime import datetime
from typing import List, Optional, Dict, Tuple

import pytz
from pydantic import BaseModel, Field, model_validator

from enum import Enum

from config.settings import settings


class Equation(str, Enum):
    HELMHOLTZ = "helmholtz"
    MODIFIED = "modified"


class Surface(str, Enum):
    SPHERE = "sphere"
    BALL = "ball"


class Family(str, Enum):
    RADIAL = "radial"
    PLANE = "plane"
    SINH = "sinh"
    DISK_EIGEN = "disk_eigen"


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class QuadMethod(str, Enum):
    DETERMINISTIC = "deterministic"
    MONTE_CARLO = "monte_carlo"


class CoeffKind(BaseModel, frozen=True):
    surface: Surface
    equation: Equation

    @classmethod
    def parse(cls, text: str) -> "CoeffKind":
        """Accepts ``sphere-modified``, ``ball/helmholtz`` and similar spellings."""
        parts = text.replace("/", "-").replace("_", "-").lower().split("-")
        if len(parts) != 2:
            raise ValueError(f"Could not parse coefficient kind: {text}")
        return cls(surface=Surface(parts[0]), equation=Equation(parts[1]))

    @property
    def label(self) -> str:
        return f"{self.surface.value}-{self.equation.value}"


class SolutionSpec(BaseModel):
    equation: Equation
    family: Family
    m: int = Field(..., ge=2, description="Space dimension")
    wavenumber: Optional[float] = Field(None, gt=0, description="lambda or mu; derived for disk_eigen")
    direction: Optional[List[float]] = None
    phase: float = 0.0
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    n: int = Field(1, ge=1)
    radius: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def check_family(self) -> "SolutionSpec":
        if self.family == Family.DISK_EIGEN:
            if self.m != 2:
                raise ValueError("disk_eigen solutions live in m = 2")
            if self.equation != Equation.HELMHOLTZ:
                raise ValueError("disk_eigen solutions solve the Helmholtz equation")
            return self

        if self.wavenumber is None:
            raise ValueError(f"{self.family.value} solutions need a wavenumber")
        if self.family == Family.SINH and self.equation != Equation.MODIFIED:
            raise ValueError("sinh solutions solve the modified equation")

        if self.family in (Family.PLANE, Family.SINH):
            if self.direction is None:
                self.direction = [1.0] + [0.0] * (self.m - 1)
            if len(self.direction) != self.m:
                raise ValueError(f"direction has {len(self.direction)} components, expected {self.m}")
            norm = sum(c * c for c in self.direction) ** 0.5
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"direction must be a unit vector, got |d| = {norm}")
        return self


class QuadConfig(BaseModel):
    method: QuadMethod = QuadMethod.DETERMINISTIC
    points_per_circle: int = Field(default_factory=lambda: settings.POINTS_PER_CIRCLE, ge=8)
    polar_order: int = Field(default_factory=lambda: settings.POLAR_ORDER, ge=4)
    radial_order: int = Field(default_factory=lambda: settings.RADIAL_ORDER, ge=4)
    samples: int = Field(default_factory=lambda: settings.MC_SAMPLES, ge=100)
    seed: int = Field(0, ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    block_size: int = Field(default_factory=lambda: settings.MC_BLOCK_SIZE, ge=1)


class MeanEstimate(BaseModel):
    value: float
    std_error: float = Field(0.0, ge=0)
    n_evals: int = Field(..., ge=0)
    method: QuadMethod

    @model_validator(mode="after")
    def check_error(self) -> "MeanEstimate":
        if self.method == QuadMethod.DETERMINISTIC and self.std_error != 0.0:
            raise ValueError("deterministic estimates carry no standard error")
        return self


class WosConfig(BaseModel):
    eps: float = Field(default_factory=lambda: settings.WOS_EPS, gt=0)
    n_walks: int = Field(default_factory=lambda: settings.WOS_WALKS, ge=1)
    max_steps: int = Field(default_factory=lambda: settings.WOS_MAX_STEPS, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    block_size: int = Field(default_factory=lambda: settings.WOS_BLOCK_SIZE, ge=1)


class WosEstimate(MeanEstimate):
    method: QuadMethod = QuadMethod.MONTE_CARLO
    n_walks: int
    truncated: int = 0
    valid: bool = True
    mean_steps: float = 0.0


class WosFieldEntry(BaseModel):
    point: List[float]
    estimate: Optional[WosEstimate] = None
    error: Optional[str] = None


class NodalPoint(BaseModel):
    point: List[float]
    value: float
    search_radius: float
    direction: Optional[List[float]] = None
    sign_change_verified: bool = True


class RunManifest(BaseModel):
    command: str
    parameters: Dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    artifact_version: str = Field(default_factory=lambda: settings.ARTIFACT_VERSION)
    timestamp: str = Field(default_factory=lambda: datetime.now(pytz.timezone(settings.TIMEZONE)).isoformat())


class Residual(BaseModel):
    label: str
    value: float
    tolerance: float

    @property
    def within(self) -> bool:
        return self.value <= self.tolerance


class CheckReport(BaseModel):
    name: str
    residuals: List[Residual] = Field(default_factory=list)
    tolerance: float
    passed: bool
    meta: Dict[str, str] = Field(default_factory=dict)
    manifest: Optional[RunManifest] = None

    @classmethod
    def build(
        cls,
        name: str,
        residuals: List[Tuple[str, float, float]],
        tolerance: float,
        meta: Optional[Dict[str, object]] = None,
        passed: Optional[bool] = None,
    ) -> "CheckReport":
        items = [Residual(label=label, value=value, tolerance=tol) for label, value, tol in residuals]
        if passed is None:
            passed = all(item.within for item in items)
        return cls(
            name=name,
            residuals=items,
            tolerance=tolerance,
            passed=passed,
            meta={key: str(value) for key, value in (meta or {}).items()},
        )

    @property
    def worst(self) -> float:
        return max((item.value for item in self.residuals), default=0.0)


class WosRequest(BaseModel):
    shape: str = "ball"
    dim: int = Field(3, ge=2)
    mu: float = Field(1.0, gt=0)
    at: List[float]
    boundary: str = "const:1"
    eps: Optional[float] = Field(None, gt=0)
    walks: Optional[int] = Field(None, ge=1)
    seed: int = Field(0, ge=0)


class NodalRequest(BaseModel):
    solution: SolutionSpec
    at: List[float]
    r_star: float = Field(..., gt=0)


class HealthResponse(BaseModel):
    status: str
    message: str
