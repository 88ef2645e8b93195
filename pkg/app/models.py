"""
Pydantic models for exported files and verification reports.
"""
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.grid import PhaseGrid


FIELD_SCHEMA = "wigner-flow/field/v1"
ORBIT_SCHEMA = "wigner-flow/orbits/v1"

OrbitBranch = Literal["closed_positive", "closed_negative", "open", "empty"]


class FieldParams(BaseModel):
    """Parameters of the ensemble a field was computed for."""
    model: str = Field(..., description="Hamiltonian model name")
    beta: Optional[float] = Field(None, gt=0.0, description="Dimensionless inverse temperature")
    gamma: Optional[float] = Field(None, gt=0.0, description="Gaussian inverse spread")
    nu2: Optional[float] = Field(None, gt=0.0, description="Harper potential strength")


class VectorValues(BaseModel):
    """Row-major components of a vector field."""
    x: List[float]
    k: List[float]


class FieldFileV1(BaseModel):
    """One exported scalar or vector field."""
    model_config = ConfigDict(populate_by_name=True)

    schema_: Literal["wigner-flow/field/v1"] = Field(default=FIELD_SCHEMA, alias="schema")
    field_name: str = Field(..., min_length=1)
    grid: PhaseGrid
    params: FieldParams
    values: List[float] = Field(..., description="Row-major values (x outer, k inner); modulus for vector fields")
    vector_values: Optional[VectorValues] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "FieldFileV1":
        size = self.grid.n_x * self.grid.n_k
        if len(self.values) != size:
            raise ValueError(f"values has {len(self.values)} entries, grid needs {size}")
        if self.vector_values is not None:
            if len(self.vector_values.x) != size or len(self.vector_values.k) != size:
                raise ValueError("vector_values components do not match the grid size")
        return self


class OrbitRecord(BaseModel):
    """A classified classical orbit."""
    energy: float
    branch: OrbitBranch
    polyline: List[Tuple[float, float]] = Field(default_factory=list)
    traced_closed: Optional[bool] = None


class OrbitFileV1(BaseModel):
    """Classical portrait export for one model."""
    model_config = ConfigDict(populate_by_name=True)

    schema_: Literal["wigner-flow/orbits/v1"] = Field(default=ORBIT_SCHEMA, alias="schema")
    model: str
    nu2: float = Field(..., gt=0.0)
    orbits: List[OrbitRecord] = Field(default_factory=list)


class Offender(BaseModel):
    """A worst-offending sample of a check."""
    x: float
    k: float
    value: float
    reference: float
    label: Optional[str] = None


class CheckReport(BaseModel):
    """Outcome of one oracle check; passed iff max_abs_error <= tolerance."""
    name: str
    max_abs_error: float
    tolerance: float = Field(..., ge=0.0)
    metric: Literal["absolute", "relative"] = "absolute"
    passed: bool
    details: List[Offender] = Field(default_factory=list)
    notes: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_verdict(self) -> "CheckReport":
        if self.passed != (self.max_abs_error <= self.tolerance):
            raise ValueError("passed must equal (max_abs_error <= tolerance)")
        return self

    @classmethod
    def build(
        cls,
        name: str,
        error: float,
        tolerance: float,
        metric: str = "absolute",
        details: Optional[List[Offender]] = None,
        notes: Optional[Dict[str, Any]] = None,
    ) -> "CheckReport":
        """Create a report, deriving the verdict from the error."""
        if not math.isfinite(error):
            error = float.fromhex("0x1.fffffffffffffp+1023")
        return cls(
            name=name,
            max_abs_error=float(error),
            tolerance=float(tolerance),
            metric=metric,
            passed=bool(error <= tolerance),
            details=details or [],
            notes=notes or {},
        )
