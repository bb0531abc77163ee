from enum import Enum
from typing import Annotated, Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

from . import settings
from .utils.parser import parse_angle, parse_list
from .utils.report import encode_matrix, encode_phase


class ModelKind(str, Enum):
    KICKED_SPIN_HALF = "kicked_spin_half"
    KICKED_SPIN_THREE_HALF = "kicked_spin_three_half"
    CUSTOM_STATIC = "custom_static"


class GaugePolicy(str, Enum):
    RAW_SOLVER = "raw_solver"
    SMOOTH_PHASE = "smooth_phase"
    PARALLEL_TRANSPORT = "parallel_transport"
    ANALYTIC_ORACLE = "analytic_oracle"


class LoopName(str, Enum):
    LAMBDA = "lambda"
    GAMMA = "gamma"
    XI = "xi"
    ETA = "eta"
    ZETA = "zeta"
    CONSTANT = "constant"
    WAYPOINTS = "waypoints"


class OutputKind(str, Enum):
    HOLONOMY = "holonomy"
    SPECTRUM = "spectrum"
    COMPARE = "compare"
    PROPAGATE = "propagate"


# Model definition
class ModelSpec(BaseModel):
    """
    Which system to build and its fixed parameters.

    Kicked models always have one period T_p = 1. Custom static models need a
    Hermitian-matrix-valued ``hamiltonian(point)`` and its dimension.
    """
    kind: ModelKind
    T: float = 1.0
    p: int = 1
    T_p: float = 1.0
    hamiltonian: Optional[Callable[..., Any]] = Field(default=None, exclude=True)
    dim: Optional[int] = None
    name: Optional[str] = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == ModelKind.CUSTOM_STATIC:
            if self.hamiltonian is None or self.dim is None:
                raise ValueError("custom_static models need a hamiltonian and its dim")
        elif self.T_p != 1.0:
            raise ValueError("kicked models have T_p = 1")
        return self

    @property
    def is_kicked(self) -> bool:
        return self.kind != ModelKind.CUSTOM_STATIC

    @property
    def period(self) -> Optional[float]:
        """Quasienergy zone width 2*pi/T_p, or None for static energies."""
        return 2 * np.pi / self.T_p if self.is_kicked else None

    @property
    def dimension(self) -> int:
        if self.kind == ModelKind.KICKED_SPIN_HALF:
            return 2
        if self.kind == ModelKind.KICKED_SPIN_THREE_HALF:
            return 4
        return int(self.dim)


ANGLE_FIELDS = ("T", "lam", "gamma", "xi", "eta", "zeta", "sweep_span")


# Run configuration
class RunConfig(BaseModel):
    """
    One batch run: model, loop, discretization and tolerances.

    Built from the flat config file plus ``--set`` overrides; unknown keys
    are rejected.
    """
    model: ModelKind = ModelKind.KICKED_SPIN_HALF
    T: float = 1.0
    p: int = 1
    lam: float = Field(default=0.0, alias="lambda")
    gamma: float = 0.7
    xi: float = 0.0
    eta: float = float(np.pi / 4)
    zeta: float = 0.0
    custom_hamiltonian: Optional[str] = None
    dim: Optional[int] = None

    loop: LoopName = LoopName.LAMBDA
    waypoints: Optional[str] = None
    K: int = Field(default=1024, ge=settings.MIN_GRID)
    policy: GaugePolicy = GaugePolicy.SMOOTH_PHASE
    N_periods: Optional[int] = Field(default=None, ge=1)
    dt: float = Field(default=1.0, gt=0)
    outputs: List[OutputKind] = [OutputKind.HOLONOMY]
    output_path: Optional[str] = None

    sweep_axis: str = "lambda"
    sweep_span: float = float(2 * np.pi)

    deg_tol: Optional[float] = Field(default=None, gt=0)
    perm_tol: float = Field(default=settings.PERM_TOL, gt=0)
    overlap_min: float = Field(default=settings.OVERLAP_MIN, gt=0)
    tolerance: float = Field(default=settings.COMPARE_TOL, gt=0)
    propagate_tolerance: float = Field(default=settings.PROPAGATE_TOL, gt=0)
    workers: int = Field(default=1, ge=1)

    model_config = ConfigDict(extra="forbid", populate_by_name=True, use_enum_values=False)

    @field_validator(*ANGLE_FIELDS, mode="before")
    @classmethod
    def parse_angles(cls, value):
        return parse_angle(value) if isinstance(value, str) else value

    @field_validator("outputs", mode="before")
    @classmethod
    def parse_outputs(cls, value):
        return parse_list(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def check_loop(self):
        if self.loop == LoopName.WAYPOINTS and not self.waypoints:
            raise ValueError("loop=waypoints needs a 'waypoints' entry")
        if self.model == ModelKind.CUSTOM_STATIC and not self.custom_hamiltonian:
            raise ValueError("model=custom_static needs 'custom_hamiltonian'")
        if self.model == ModelKind.KICKED_SPIN_HALF and self.loop in (LoopName.ETA, LoopName.ZETA):
            raise ValueError(f"loop '{self.loop.value}' needs the spin-3/2 model")
        return self

    def provenance(self) -> Dict[str, Any]:
        """Config echo for reports, keyed by the config-file names."""
        return self.model_dump(mode="json", by_alias=True, exclude={"output_path"})


# Report models
def _matrix_value(value):
    return encode_matrix(value) if isinstance(value, np.ndarray) else value


def _phase_value(value):
    if isinstance(value, (np.ndarray, complex, np.complexfloating)):
        return encode_phase(value)
    return value


ComplexMatrix = Annotated[List[List[Tuple[float, float]]], BeforeValidator(_matrix_value)]
FloatList = Annotated[List[float], BeforeValidator(
    lambda value: value.tolist() if isinstance(value, np.ndarray) else value)]


class ComplexNumber(BaseModel):
    re: float
    im: float


# A 1x1 phase factor, or the unitary sub-block of a degenerate block
Phase = Annotated[Union[ComplexNumber, ComplexMatrix], BeforeValidator(_phase_value)]


class LoopMeta(BaseModel):
    name: str
    varying: List[str]
    swept: Dict[str, float]
    waypoints: List[List[float]]
    K: int


class QuasienergyEnds(BaseModel):
    start: FloatList
    end: FloatList


class HolonomySection(BaseModel):
    loop: LoopMeta
    policy: GaugePolicy
    blocks: List[List[int]]
    W: ComplexMatrix
    B: ComplexMatrix
    M: ComplexMatrix
    permutation: Optional[List[int]] = None
    phases: List[Phase] = []
    geometric_phases: Optional[List[float]] = None
    delta_n: List[int] = []
    consistent: bool = True
    quasienergies: QuasienergyEnds


class SpectrumSection(BaseModel):
    """Column-wise sweep table, keyed like the CSV header."""
    axis: str
    columns: Dict[str, FloatList]


class OracleSection(BaseModel):
    M: ComplexMatrix
    W: ComplexMatrix
    B: ComplexMatrix
    E: float
    Q: float
    theta_rule: Optional[str] = None


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None


class ComparisonSection(BaseModel):
    oracle: Optional[OracleSection] = None
    block_structure_match: Optional[bool] = None
    distances: Dict[str, float] = {}
    checks: List[CheckResult] = []

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]


class PropagationSection(BaseModel):
    N_periods: int
    M_numeric: ComplexMatrix
    dynamical_phases: FloatList
    unitarity_defect: float
    permutation: Optional[List[int]] = None
    permutation_agrees: bool
    distance_to_holonomy: float


class ErrorObject(BaseModel):
    """Error type, detail and exit code plus the error's structured context."""
    type: str
    detail: str
    exit_code: int

    model_config = ConfigDict(extra="allow")


class Report(BaseModel):
    """
    One emitted JSON document.

    ``canonical_hash`` covers every other field except ``generated_at``.
    """
    kind: Optional[OutputKind] = None
    version: str
    config: Optional[Dict[str, Any]] = None
    theta_rule: Optional[str] = None
    holonomy: Optional[HolonomySection] = None
    spectrum: Optional[SpectrumSection] = None
    comparison: Optional[ComparisonSection] = None
    propagation: Optional[PropagationSection] = None
    error: Optional[ErrorObject] = None
    canonical_hash: Optional[str] = None
    generated_at: Optional[str] = None
