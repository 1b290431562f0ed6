from typing import Any, Dict, Optional


class VarhorseError(Exception):
    """Base class for every error raised by the toolkit."""


class PreconditionError(VarhorseError, ValueError):
    """An argument violates the documented precondition of an operation."""


class ConfigError(PreconditionError):
    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class InsufficientItinerary(PreconditionError):
    pass


class OrbitEscape(VarhorseError):
    def __init__(self, step: int, message: str = "non-finite coordinate"):
        self.step = step
        super().__init__(f"orbit escaped at step {step}: {message}")


class DegenerateCocycle(VarhorseError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"singular Jacobian at step {step}")


class SplittingDegenerate(VarhorseError):
    def __init__(self, angle: float):
        self.angle = angle
        super().__init__(f"stable/unstable angle {angle:.3e} below threshold")


class NoFiniteCertificate(VarhorseError):
    def __init__(self, required_ell: float):
        self.required_ell = required_ell
        super().__init__(f"required Pesin constant {required_ell:.3e} exceeds the cap")


class ChartDegenerate(VarhorseError):
    pass


class CapExceeded(VarhorseError):
    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(f"requested {requested} cylinders, cap is {cap}")


class CrossingIncomplete(VarhorseError):
    def __init__(self, i: int, j: int):
        self.i = i
        self.j = j
        super().__init__(f"source {i} does not fully cross target {j}")


class BudgetExhausted(VarhorseError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class BranchCertificationError(VarhorseError):
    """Certification of a candidate branch stopped at ``stage``."""
    stage = "unknown"

    def __init__(self, message: str, witness: Any = None):
        self.witness = witness
        super().__init__(f"[{self.stage}] {message}")


class CrossFail(BranchCertificationError):
    stage = "cross"


class ConeFail(BranchCertificationError):
    stage = "cone"


class DiamFail(BranchCertificationError):
    stage = "diameter"

    def __init__(self, j: int, diameter: float, delta: float):
        self.j = j
        super().__init__(f"diam(f^{j}(S)) = {diameter:.3e} exceeds delta = {delta:.3e}")


class QGFail(BranchCertificationError):
    stage = "quasi-generic"
