from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import PreconditionError

PROVENANCES = ("analytic", "long-orbit", "fixture")


@dataclass(frozen=True)
class ReferenceMeasure:
    """Integrals of the test family against the reference measure mu."""
    name: str
    integrals: Tuple[float, ...]
    integral_error: float = 0.0
    provenance: str = "analytic"
    seed: Optional[int] = None
    length: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "integrals", tuple(float(v) for v in self.integrals))
        if self.integral_error < 0:
            raise PreconditionError("integral_error must be >= 0")
        if self.provenance not in PROVENANCES:
            raise PreconditionError(f"unknown provenance '{self.provenance}'")

    def check_family(self, count: int) -> None:
        if len(self.integrals) != count:
            raise PreconditionError(
                f"reference '{self.name}' has {len(self.integrals)} integrals, family has {count}")

    def head(self, s: int) -> Tuple[float, ...]:
        if s > len(self.integrals):
            raise PreconditionError(f"reference has only {len(self.integrals)} integrals")
        return self.integrals[:s]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "integrals": list(self.integrals),
            "integral_error": self.integral_error,
            "provenance": self.provenance,
            "seed": self.seed,
            "length": self.length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceMeasure":
        return cls(
            name=data["name"],
            integrals=tuple(data["integrals"]),
            integral_error=data.get("integral_error", 0.0),
            provenance=data.get("provenance", "analytic"),
            seed=data.get("seed"),
            length=data.get("length"),
        )
