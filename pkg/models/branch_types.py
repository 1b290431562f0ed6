from dataclasses import dataclass, field
from typing import Optional, Tuple

from .errors import PreconditionError
from .pesin_types import ConeCertificate, Cylinder, PesinCertificate
from .phase_space import Point


@dataclass(frozen=True)
class QuasiGenericityParams:
    rho: float
    s: int
    n_min: int = 1

    def __post_init__(self):
        if self.rho <= 0:
            raise PreconditionError("rho must be > 0")
        if self.s < 1 or self.n_min < 1:
            raise PreconditionError("s and n_min must be positive")

    def check_family(self, count: int) -> None:
        if self.s > count:
            raise PreconditionError(f"s = {self.s} exceeds family count {count}")


@dataclass(frozen=True)
class QGResult:
    """Outcome of a (rho, s, n) quasi-genericity check."""
    passed: bool
    max_residual: float
    witness_index: Optional[int] = None
    residuals: Tuple[float, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class QGCertificate:
    rho: float
    s: int
    delta: float
    base_residual: float
    max_diameter: float

    def to_dict(self) -> dict:
        return {"rho": self.rho, "s": self.s, "delta": self.delta,
                "base_residual": self.base_residual, "max_diameter": self.max_diameter}


@dataclass(frozen=True, eq=False)
class HyperbolicBranch:
    """Certified return f^m: S -> U inside one rectangle."""
    return_time: int
    source: Cylinder
    target: Cylinder
    base_point: Point
    cone_certificate: ConeCertificate
    diameter_profile: Tuple[float, ...]
    qg_certificate: QGCertificate
    pesin_certificate: Optional[PesinCertificate] = None
    landing_point: Optional[Point] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return self.return_time

    @property
    def rectangle(self):
        return self.source.rectangle

    def to_dict(self) -> dict:
        return {
            "return_time": self.return_time,
            "base_point": list(self.base_point.coordinates),
            "landing_point": list(self.landing_point.coordinates) if self.landing_point else None,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "cone_certificate": self.cone_certificate.to_dict(),
            "diameter_profile": list(self.diameter_profile),
            "qg_certificate": self.qg_certificate.to_dict(),
            "pesin_certificate": self.pesin_certificate.to_dict() if self.pesin_certificate else None,
            "notes": list(self.notes),
        }
