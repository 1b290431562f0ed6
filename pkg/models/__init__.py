from .branch_types import HyperbolicBranch, QGCertificate, QGResult, QuasiGenericityParams
from .errors import (BranchCertificationError, BudgetExhausted, CapExceeded, ChartDegenerate,
                     ConeFail, ConfigError, CrossFail, CrossingIncomplete, DegenerateCocycle,
                     DiamFail, InsufficientItinerary, NoFiniteCertificate, OrbitEscape,
                     PreconditionError, QGFail, SplittingDegenerate, VarhorseError)
from .experiment_config import ExperimentConfig
from .horseshoe_types import CylinderRefinement, SymbolicWord, VariableTimeHorseshoe
from .map_system import MapSystem
from .measure_types import (Block, CheckResult, ConvergenceReport, MeasureRow, OrbitDecomposition,
                            PeriodicOrbitMeasure, StageReport, WeakStarNeighborhood)
from .pesin_types import ConeCertificate, ConeField, Cylinder, PesinCertificate, Rectangle
from .phase_space import PhaseSpace, Point
from .reference_measure import ReferenceMeasure
from .test_functions import TestFunction, TestFunctionFamily, fourier_family

__all__ = [
    "Block", "BranchCertificationError", "BudgetExhausted", "CapExceeded", "ChartDegenerate",
    "CheckResult", "ConeCertificate", "ConvergenceReport", "ConeFail", "ConeField", "ConfigError", "CrossFail",
    "CrossingIncomplete", "Cylinder", "CylinderRefinement", "DegenerateCocycle", "DiamFail",
    "ExperimentConfig", "HyperbolicBranch", "InsufficientItinerary", "MapSystem", "MeasureRow",
    "NoFiniteCertificate", "OrbitDecomposition", "OrbitEscape", "PeriodicOrbitMeasure",
    "PesinCertificate", "PhaseSpace", "Point", "PreconditionError", "QGCertificate", "QGFail",
    "QGResult", "QuasiGenericityParams", "Rectangle", "ReferenceMeasure", "SplittingDegenerate", "StageReport",
    "SymbolicWord", "TestFunction", "TestFunctionFamily", "VariableTimeHorseshoe",
    "VarhorseError", "WeakStarNeighborhood", "fourier_family",
]
