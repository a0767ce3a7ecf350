from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# ---------------------------------------------------------------------------
# OpenQASM syntax tree (immutable after parsing)
# ---------------------------------------------------------------------------

RegisterKind = Literal["qubit", "bit"]


@dataclass(frozen=True)
class RegisterRef:
    """One element of a register, e.g. q[1]"""
    register: str
    index: int

    def __str__(self) -> str:
        return f"{self.register}[{self.index}]"


@dataclass(frozen=True)
class RegisterDecl:
    kind: RegisterKind
    name: str
    width: int
    line: int = 0


@dataclass(frozen=True)
class GateApplication:
    gate: str
    angles: Tuple[float, ...]
    targets: Tuple[RegisterRef, ...]
    line: int = 0


@dataclass(frozen=True)
class MeasureStmt:
    """Pairwise measurement: qubits[i] is measured into bits[i]"""
    bits: Tuple[RegisterRef, ...]
    qubits: Tuple[RegisterRef, ...]
    line: int = 0


@dataclass(frozen=True)
class CallStmt:
    callee: str
    args: Tuple[str, ...]
    line: int = 0


Statement = RegisterDecl | GateApplication | MeasureStmt | CallStmt


@dataclass(frozen=True)
class Param:
    name: str
    kind: RegisterKind
    width: int


@dataclass(frozen=True)
class PragmaLine:
    line: int
    text: str


@dataclass(frozen=True)
class SubroutineDef:
    name: str
    params: Tuple[Param, ...]
    body: Tuple[Statement, ...]
    pragma_lines: Tuple[PragmaLine, ...]
    start_line: int
    end_line: int

    @property
    def is_test(self) -> bool:
        return self.name.startswith("test")


@dataclass(frozen=True)
class Program:
    version: str
    includes: Tuple[str, ...]
    declarations: Tuple[RegisterDecl, ...]
    statements: Tuple[Statement, ...]
    subroutines: Tuple[SubroutineDef, ...]
    source_path: str
    stray_pragmas: Tuple[PragmaLine, ...] = ()

    def subroutine(self, name: str) -> Optional[SubroutineDef]:
        for sub in self.subroutines:
            if sub.name == name:
                return sub
        return None


# ---------------------------------------------------------------------------
# Circuits and quantum states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatBody:
    """A test body with every call expanded"""
    statements: Tuple[Statement, ...]
    register_table: Dict[str, Tuple[RegisterKind, int]]
    measurement_map: Dict[int, int]

    def offsets(self, kind: RegisterKind) -> Dict[str, int]:
        """Global index of element 0 of every register of the given kind, in declaration order"""
        result, cursor = {}, 0
        for name, (reg_kind, width) in self.register_table.items():
            if reg_kind == kind:
                result[name] = cursor
                cursor += width
        return result

    def total_width(self, kind: RegisterKind) -> int:
        return sum(width for reg_kind, width in self.register_table.values() if reg_kind == kind)


@dataclass(frozen=True)
class Operation:
    name: str
    qubits: Tuple[int, ...]
    params: Tuple[float, ...] = ()
    clbit: Optional[int] = None

    @property
    def is_measurement(self) -> bool:
        return self.name == "measure"


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: Tuple[Operation, ...]
    classical_width: int
    measurement_map: Dict[int, int] = field(default_factory=dict)

    @property
    def gates(self) -> Tuple[Operation, ...]:
        return tuple(op for op in self.ops if not op.is_measurement)

    @property
    def measurements(self) -> Tuple[Operation, ...]:
        return tuple(op for op in self.ops if op.is_measurement)


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray
    num_qubits: int

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(round(math.log2(self.matrix.shape[0])))


# ---------------------------------------------------------------------------
# Diagnostics and pragma directives
# ---------------------------------------------------------------------------

class Diagnostic(BaseModel):
    severity: Literal["error", "warning"]
    code: str
    line: int = Field(ge=1)
    message: str
    hint: str = ""
    path: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def format(self) -> str:
        location = f"{self.path}:{self.line}" if self.path else f"line {self.line}"
        text = f"{location}: {self.severity} {self.code} {self.message}"
        if self.hint:
            text += f" (hint: {self.hint})"
        return text


ComparisonOperator = Literal["<", "<=", "==", ">", ">=", "!=", "~="]


class ComparisonSpec(BaseModel):
    operator: ComparisonOperator
    threshold: float
    atol: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _atol_iff_approx(self) -> "ComparisonSpec":
        if (self.operator == "~=") != (self.atol is not None):
            raise ValueError("atol is required for ~= and only for ~=")
        return self

    def describe(self) -> str:
        if self.operator == "~=":
            return f"~= {self.threshold:g} atol={self.atol:g}"
        return f"{self.operator} {self.threshold:g}"


class Distribution(BaseModel):
    """Bitstring -> probability; classical bit 0 is the rightmost character"""
    entries: Dict[str, float]

    @model_validator(mode="after")
    def _check_keys(self) -> "Distribution":
        widths = {len(key) for key in self.entries}
        if len(widths) > 1:
            raise ValueError("all bitstrings must have the same length")
        for key, prob in self.entries.items():
            if not key or set(key) - {"0", "1"}:
                raise ValueError(f"invalid bitstring {key!r}")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"probability of {key!r} outside [0, 1]")
        return self

    @property
    def width(self) -> int:
        return len(next(iter(self.entries))) if self.entries else 0

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def get(self, key: str) -> float:
        return self.entries.get(key, 0.0)

    @classmethod
    def from_counts(cls, counts: "Counts") -> "Distribution":
        return cls(entries={key: count / counts.shots for key, count in counts.entries.items()})


class Counts(BaseModel):
    entries: Dict[str, int]
    shots: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_total(self) -> "Counts":
        if sum(self.entries.values()) != self.shots:
            raise ValueError("counts do not add up to the number of shots")
        return self

    @property
    def width(self) -> int:
        return len(next(iter(self.entries))) if self.entries else 0


ConfigKey = Literal["shots", "seed", "backend", "runtime", "runtime_version"]

AssertionKind = Literal[
    "output", "tvd", "hellinger", "kl", "chi2", "marginal", "observable", "entropy",
    "correlation", "probability", "most_frequent", "fidelity", "entangled", "gate_set", "depth",
]

STRUCTURAL_KINDS = frozenset({"gate_set", "depth"})


class ConfigDirective(BaseModel):
    key: ConfigKey
    value: Any
    line: int


class AssertionDirective(BaseModel):
    kind: AssertionKind
    line: int
    raw: str = ""
    comparison: Optional[ComparisonSpec] = None
    distribution: Optional[Distribution] = None
    bitstring: Optional[str] = None
    qubits: List[int] = Field(default_factory=list)
    bits: List[int] = Field(default_factory=list)
    value: Optional[int] = None
    gates: List[str] = Field(default_factory=list)
    bound: Optional[int] = None

    @property
    def is_structural(self) -> bool:
        return self.kind in STRUCTURAL_KINDS


class TestConfig(BaseModel):
    __test__: ClassVar[bool] = False

    shots: int = Field(default=1024, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)  # None means "random"
    backend: Literal["ideal", "noisy", "hardware"] = "ideal"
    runtime: str = "native"
    runtime_versions: List[str] = Field(default_factory=list)

    @property
    def seed_label(self) -> str:
        return "random" if self.seed is None else str(self.seed)


class NoiseModel(BaseModel):
    p1: float = Field(default=1e-3, ge=0.0, le=1.0)
    p2: float = Field(default=1e-2, ge=0.0, le=1.0)


# ---------------------------------------------------------------------------
# Test cases and results
# ---------------------------------------------------------------------------

Status = Literal["pass", "fail", "error"]


@dataclass(frozen=True)
class TestCase:
    """One discovered test: its subroutine plus parsed pragmas"""
    __test__ = False

    path: str
    program: Program
    subroutine: SubroutineDef
    config: TestConfig
    assertions: Tuple[AssertionDirective, ...]
    file_index: int = 0
    test_index: int = 0
    blocking_diagnostics: Tuple[Diagnostic, ...] = ()

    @property
    def name(self) -> str:
        return self.subroutine.name


@dataclass
class ExecutionGroup:
    runtime: str
    version: Optional[str]
    tests: List[TestCase] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.runtime if self.version is None else f"{self.runtime}@{self.version}"


class AssertionResult(BaseModel):
    status: Status
    kind: str
    message: str
    actual: Any = None
    expected: str = ""
    line: int = 0


class TestResult(BaseModel):
    __test__: ClassVar[bool] = False

    test_name: str
    file_path: str
    runtime_label: str = "native"
    seed_used: Optional[int] = None
    assertion_results: List[AssertionResult] = Field(default_factory=list)
    status: Status
    duration_seconds: float = 0.0
    message: str = ""

    @staticmethod
    def status_for(results: List[AssertionResult], setup_error: bool = False) -> Status:
        if setup_error or any(r.status == "error" for r in results):
            return "error"
        if all(r.status == "pass" for r in results):
            return "pass"
        return "fail"


class RunReport(BaseModel):
    results: List[TestResult] = Field(default_factory=list)
    total: int = 0
    passed: int = 0
    failed: int = 0
    errored: int = 0
    wall_clock_seconds: float = 0.0
    master_seed: int = 0
    setup_errors: List[str] = Field(default_factory=list)

    @classmethod
    def from_results(
        cls,
        results: List[TestResult],
        wall_clock_seconds: float,
        master_seed: int,
        setup_errors: Optional[List[str]] = None,
    ) -> "RunReport":
        return cls(
            results=results,
            total=len(results),
            passed=sum(1 for r in results if r.status == "pass"),
            failed=sum(1 for r in results if r.status == "fail"),
            errored=sum(1 for r in results if r.status == "error"),
            wall_clock_seconds=wall_clock_seconds,
            master_seed=master_seed,
            setup_errors=setup_errors or [],
        )

    @property
    def ok(self) -> bool:
        return self.passed == self.total and not self.setup_errors


class RunOptions(BaseModel):
    seed: Optional[int] = Field(default=None, ge=0)  # master seed; drawn at run start when absent
    jobs: int = Field(default=1, ge=1)
    keyword: Optional[str] = None
    home: str = ".qutest"
    runtime: str = "native"


class ConsoleOptions(BaseModel):
    verbose: bool = False
    color: bool = True
    unicode: bool = True


class ProbeRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    runtime: str
    version: Optional[str] = None
    status: Literal["ok", "error"]
    timestamp: str
    oracle_counts: Dict[str, int] = Field(default_factory=dict, alias="oracleCounts")
    message: str = ""
