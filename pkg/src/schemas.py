"""
Pydantic models for inputs, reports and verdicts.
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator, model_validator


class VerdictStatus(str, Enum):
    """Outcome of checking a theorem on a concrete scheme."""
    HOLDS = "holds"
    FAILS = "fails"
    NOT_APPLICABLE = "not-applicable"
    HYPOTHESES_NOT_MET = "hypotheses-not-met"


class FilterStatus(str, Enum):
    """Outcome of the feasibility filter for one degree profile."""
    ELIMINATED = "eliminated"
    SURVIVES = "survives"


class PermutationGroupInput(BaseModel):
    """Generators of a permutation group, each as a full image array."""
    degree: int = Field(ge=1)
    generators: List[List[int]] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_bijections(self):
        for index, images in enumerate(self.generators):
            if len(images) != self.degree:
                raise ValueError(f"generator {index} has {len(images)} images, expected {self.degree}")
            if sorted(images) != list(range(self.degree)):
                raise ValueError(f"generator {index} is not a bijection on 0..{self.degree - 1}")
        return self


class DesignInput(BaseModel):
    """Point-by-block 0/1 incidence matrix."""
    incidence: List[List[int]] = Field(min_length=1)

    @field_validator("incidence")
    @classmethod
    def _check_shape(cls, rows):
        width = len(rows[0])
        for index, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"row {index} has {len(row)} entries, expected {width}")
            if any(x not in (0, 1) for x in row):
                raise ValueError(f"row {index} has entries outside {{0, 1}}")
        return rows


class RelationRef(BaseModel):
    index: int
    source_fiber: int
    target_fiber: int


class SchemeProfile(BaseModel):
    """Combinatorial classification of a scheme."""
    point_count: int
    relation_count: int
    n: int
    fiber_sizes: List[int]
    is_balanced: bool
    r: Optional[int] = None
    is_half_homogeneous: bool
    m: Optional[int] = None
    is_reduced: bool
    p_valenced_primes: List[int] = []
    e_c_classes: List[List[int]]
    thin_relations: List[RelationRef] = []
    homogeneous_degrees: Optional[List[int]] = None
    cross_degrees: Optional[List[int]] = None


class IdempotentSummary(BaseModel):
    index: int
    m: int
    n: int
    support: List[int]
    principal: bool


class IdempotentResiduals(BaseModel):
    idempotency: float
    orthogonality: float
    centrality: float
    completeness: float
    trace_integrality: float


class FiberRestriction(BaseModel):
    """How the idempotents restrict to one fiber."""
    fiber: int
    vanishing: List[int] = []
    injective: bool
    degree_law: bool


class Theorem1Verdict(BaseModel):
    status: VerdictStatus
    is_balanced: bool
    consistent: bool
    fibers: List[FiberRestriction]


class Theorem2Verdict(BaseModel):
    status: VerdictStatus
    idempotent_count: int
    consistent: bool
    bipartition: Optional[Tuple[List[int], List[int]]] = None
    message: str = ""


class Theorem3Verdict(BaseModel):
    status: VerdictStatus
    consistent: bool
    m: Optional[int] = None
    n: Optional[int] = None
    r: Optional[int] = None
    clause_small_m: bool = False
    clause_coprime_valenced: List[int] = []
    message: str = ""


class EmbeddingReport(BaseModel):
    """Result of mapping a balanced scheme into C_{U_X} tensor T_k."""
    transversal: List[int]
    e_c_classes: List[List[int]]
    thin_choices: Dict[int, int]
    point_map: List[int]
    target_fiber_count: int
    embedding_verified: bool
    trivial_e_c: bool
    class_isomorphic: List[bool]


class DirectSumSplit(BaseModel):
    components: List[List[int]]
    idempotent_criterion: Optional[bool] = None


class DegreeProfile(BaseModel):
    """Candidate parameters (m, r, d_X, d_XY) of a reduced (m, n, r)-scheme."""
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    r: int = Field(ge=1)
    d_X: Tuple[int, ...]
    d_XY: Tuple[int, ...] = ()

    @field_validator("d_X", "d_XY")
    @classmethod
    def _sorted(cls, values):
        return tuple(sorted(values))

    @model_validator(mode="after")
    def _check_profile(self):
        if len(self.d_X) != self.r or sum(self.d_X) != self.m:
            raise ValueError(f"d_X must have {self.r} parts summing to {self.m}")
        if 1 not in self.d_X or min(self.d_X) < 1:
            raise ValueError("d_X must contain 1 and only positive parts")
        if self.d_XY:
            if len(self.d_XY) != self.r or sum(self.d_XY) != self.m:
                raise ValueError(f"d_XY must have {self.r} parts summing to {self.m}")
            if min(self.d_XY) < 2:
                raise ValueError("d_XY must not contain thin relations")
        return self

    def label(self) -> str:
        def fmt(values):
            return "{" + ",".join(str(v) for v in values) + "}"
        return f"d_X={fmt(self.d_X)} d_XY={fmt(self.d_XY)}"


class FilterVerdict(BaseModel):
    profile: DegreeProfile
    status: FilterStatus
    rule: Optional[str] = None
    trace: List[str] = []

    @model_validator(mode="after")
    def _rule_when_eliminated(self):
        if self.status == FilterStatus.ELIMINATED and not self.rule:
            raise ValueError("an eliminated verdict names its rule")
        return self


class CspResult(BaseModel):
    feasible: bool
    exhausted: bool = False
    assignment: Dict[str, int] = {}
    pairing: List[int] = []
    pairing_y: List[int] = []
    d_Y: Optional[Tuple[int, ...]] = None
    nodes: int = 0
    trace: List[str] = []


class TableEntry(BaseModel):
    r: int
    m: int
    status: FilterStatus
    rule: Optional[str] = None
    survivors: List[DegreeProfile] = []
    eliminated: List[FilterVerdict] = []
    notes: List[str] = []


class TableReport(BaseModel):
    m_max: int
    catalog_used: bool
    entries: List[TableEntry]


class CommandConfig(BaseModel):
    """Validated command line options."""
    subcommand: str
    seed: int
    eigen_tol: PositiveFloat
    rank_tol: PositiveFloat
    idempotency_tol: PositiveFloat
    json_output: bool = False
    verbose: bool = False
    input_paths: List[str] = []
    output_path: Optional[str] = None
