from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import PreconditionError
from .horseshoe_types import SymbolicWord
from .phase_space import Point
from .reference_measure import ReferenceMeasure


@dataclass(frozen=True, eq=False)
class PeriodicOrbitMeasure:
    """Equidistribution on the periodic f-orbit coded by ``word``."""
    horseshoe: object
    word: SymbolicWord
    period: int
    support_orbit: Tuple[Point, ...]
    integrals: Tuple[float, ...]
    error_radius: float

    def __post_init__(self):
        if self.period != len(self.support_orbit):
            raise PreconditionError("support orbit length must equal the period")


@dataclass(frozen=True)
class WeakStarNeighborhood:
    """O(rho', s) around the reference measure."""
    rho: float
    s: int
    reference: ReferenceMeasure

    def __post_init__(self):
        if self.rho <= 0:
            raise PreconditionError("rho must be > 0")

    def distance(self, integrals) -> float:
        ref = self.reference.head(self.s)
        return max(abs(a - b) for a, b in zip(integrals[:self.s], ref))

    def contains(self, integrals, slack: float = 0.0) -> bool:
        return self.distance(integrals) < self.rho + slack


@dataclass(frozen=True)
class Block:
    symbol: int
    start: int
    length: int


@dataclass(frozen=True)
class OrbitDecomposition:
    L: int
    block_counts: Tuple[int, ...]
    L_prime: int
    remainder: int
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        if self.L != self.L_prime + self.remainder:
            raise PreconditionError("L must equal L' + R")


@dataclass(frozen=True)
class CheckResult:
    """Pass/fail of a 2rho or 3rho check with the slack that was granted."""
    passed: bool
    value: float
    threshold: float
    slack: float

    def __bool__(self) -> bool:
        return self.passed

    @property
    def max_residual(self) -> float:
        return self.value

    @property
    def distance(self) -> float:
        return self.value


@dataclass(frozen=True)
class MeasureRow:
    """One periodic-orbit measure checked against O(3 rho, s)."""
    word: str
    period: int
    distance: float
    slack: float
    passed: bool

    def to_dict(self) -> dict:
        return {"word": self.word, "period": self.period, "distance": self.distance,
                "slack": self.slack, "passed": self.passed}


@dataclass(frozen=True, eq=False)
class StageReport:
    index: int
    rho: float
    s: int
    n_branches: int
    return_times: Tuple[int, ...]
    max_word_len: int
    distance: float
    slack: float
    passed: bool
    measures: Tuple[MeasureRow, ...] = ()
    error: Optional[str] = None
    horseshoe: Optional[object] = None
    refinement: Optional[object] = None

    def to_dict(self) -> dict:
        return {
            "stage": self.index,
            "rho": self.rho,
            "s": self.s,
            "n_branches": self.n_branches,
            "return_times": list(self.return_times),
            "max_word_len": self.max_word_len,
            "measures": len(self.measures),
            "d_n": self.distance,
            "slack": self.slack,
            "threshold": 3 * self.rho + self.slack,
            "passed": self.passed,
            "error": self.error,
        }


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    stages: Tuple[StageReport, ...]

    @property
    def passed(self) -> bool:
        return all(stage.passed for stage in self.stages)

    @property
    def distances(self) -> Tuple[float, ...]:
        return tuple(stage.distance for stage in self.stages)

    def table(self) -> List[dict]:
        return [stage.to_dict() for stage in self.stages]
