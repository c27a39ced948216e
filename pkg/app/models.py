from sqlmodel import SQLModel, Field, Relationship
from pydantic import model_validator
from datetime import datetime
from typing import Optional, List, Dict, Any
from enum import Enum


DENSE_HARD_CAP = 12


class EnsembleKind(str, Enum):
    """Instance families the ensemble generators can draw"""

    PAULI_STRING = "pauli_string"
    CLASSICAL = "classical"
    SUBCUBE = "subcube"
    RANDOM_PROJECTION = "random_projection"
    RANDOM_BOOLEAN = "random_boolean"
    RANDOM_CONTRACTION = "random_contraction"
    RANDOM_LOW_DEGREE = "random_low_degree"
    REMARK_P2 = "remark_p2"


class CheckStatus(str, Enum):
    """Outcome of evaluating one inequality on one instance"""

    HOLDS = "holds"
    VIOLATED = "violated"
    SKIPPED_PRECONDITION = "skipped_precondition"
    DEGENERATE = "degenerate"


class Hypothesis(str, Enum):
    """Standing assumption a check places on its input"""

    NONE = "none"
    ANY = "any"
    HERMITIAN = "hermitian"
    CONTRACTION = "contraction"
    SELF_ADJOINT_CONTRACTION = "self_adjoint_contraction"
    UNIT_INTERVAL = "unit_interval"
    POSITIVE = "positive"
    PROJECTION = "projection"
    BALANCED_PROJECTION = "balanced_projection"


class ConstantRole(str, Enum):
    """Where the free constant of a check sits"""

    NONE = "none"
    RHS = "rhs"
    LHS = "lhs"
    EXPONENT = "exponent"


# Persistent models (stored in database)
class VerificationRun(SQLModel, table=True):
    __tablename__ = "verification_runs"  # type: ignore[assignment]

    id: Optional[int] = Field(default=None, primary_key=True)
    verb: str = Field(max_length=20, index=True)
    config_digest: str = Field(max_length=64)
    seed: str = Field(max_length=20)
    created_at: datetime = Field(default_factory=datetime.utcnow, index=True)
    record_count: int = Field(default=0)
    violated_count: int = Field(default=0)

    records: List["StoredCheckRecord"] = Relationship(back_populates="run")


class StoredCheckRecord(SQLModel, table=True):
    __tablename__ = "check_records"  # type: ignore[assignment]

    id: Optional[int] = Field(default=None, primary_key=True)
    run_id: int = Field(foreign_key="verification_runs.id", index=True)
    check_id: str = Field(max_length=64, index=True)
    instance_id: str = Field(max_length=255)
    status: CheckStatus = Field(index=True)
    lhs: float
    rhs: float
    ratio: Optional[float] = Field(default=None)
    params_json: str = Field(default="{}")
    note: str = Field(default="", max_length=2000)

    run: VerificationRun = Relationship(back_populates="records")


# Non-persistent schemas (config files, reports, interchange)
class PauliTerm(SQLModel, table=False):
    s: List[int]
    re: float
    im: float = 0.0


class ObservablePayload(SQLModel, table=False):
    n: int = Field(ge=1)
    terms: List[PauliTerm] = Field(default_factory=list)


class EnsembleSpec(SQLModel, table=False):
    kind: EnsembleKind
    n: int = Field(ge=1, le=DENSE_HARD_CAP)
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, lt=2**64)
    count: int = Field(default=1, ge=1)

    def label(self) -> str:
        extras = ",".join(f"{key}={self.params[key]}" for key in sorted(self.params))
        suffix = f",{extras}" if extras else ""
        return f"{self.kind.value}[n={self.n}{suffix},seed={self.seed}]"


class CheckSpec(SQLModel, table=False):
    check_id: str = Field(min_length=1)
    params: Dict[str, Any] = Field(default_factory=dict)


class Tolerances(SQLModel, table=False):
    relative: float = Field(default=1e-9, ge=0.0)
    absolute: float = Field(default=1e-12, ge=0.0)


class WitnessSettings(SQLModel, table=False):
    restarts: int = Field(default=8, ge=1)
    steps: int = Field(default=40, ge=1)
    step_size: float = Field(default=0.3, gt=0.0)


class RunConfig(SQLModel, table=False):
    checks: List[CheckSpec] = Field(default_factory=list)
    ensembles: List[EnsembleSpec] = Field(default_factory=list)
    output: str = "out"
    seed: int = Field(default=0, ge=0, lt=2**64)
    parallelism: int = Field(default=1, ge=1)
    n_cap: int = Field(default=DENSE_HARD_CAP, ge=1, le=DENSE_HARD_CAP)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    witness: WitnessSettings = Field(default_factory=WitnessSettings)

    @model_validator(mode="after")
    def ensembles_within_cap(self) -> "RunConfig":
        for spec in self.ensembles:
            if spec.n > self.n_cap:
                raise ValueError(f"ensemble {spec.label()} exceeds the dense cap n <= {self.n_cap}")
        return self


class CheckRecord(SQLModel, table=False):
    check_id: str
    instance_id: str = ""
    params: Dict[str, float] = Field(default_factory=dict)
    lhs: float = 0.0
    rhs: float = 0.0
    ratio: Optional[float] = Field(default=None)
    status: CheckStatus
    note: str = ""


class ConstantEstimate(SQLModel, table=False):
    check_id: str
    constant_role: ConstantRole
    sup_ratio: Optional[float] = Field(default=None)
    implied_constant: Optional[float] = Field(default=None)
    witness: Optional[str] = Field(default=None)
    evaluated: int = 0
    skipped: int = 0
