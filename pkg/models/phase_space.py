from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import PreconditionError

TORUS = "torus2"
PLANAR = "planar"


@dataclass(frozen=True)
class PhaseSpace:
    """
    Flat two-dimensional phase space: the unit torus or a planar region.

    On the torus all displacements use the minimal image, so distances are
    the flat torus metric.
    """
    tag: str
    bounds: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0))

    def __post_init__(self):
        if self.tag not in (TORUS, PLANAR):
            raise PreconditionError(f"unknown phase space '{self.tag}'")

    @property
    def is_torus(self) -> bool:
        return self.tag == TORUS

    def wrap(self, xy: np.ndarray) -> np.ndarray:
        if self.is_torus:
            wrapped = np.mod(xy, 1.0)
            # tiny negatives round up to exactly 1.0
            return np.where(wrapped >= 1.0, 0.0, wrapped)
        return xy

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vector from ``a`` to ``b``."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.is_torus:
            d = d - np.round(d)
        return d

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.linalg.norm(self.displacement(a, b)))

    def max_distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.max(np.abs(self.displacement(a, b))))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo = np.array([self.bounds[0][0], self.bounds[1][0]])
        hi = np.array([self.bounds[0][1], self.bounds[1][1]])
        return lo + (hi - lo) * rng.random((count, 2))


def _unit_interval(c: float) -> float:
    c = c % 1.0
    return 0.0 if c >= 1.0 else c


@dataclass(frozen=True)
class Point:
    coordinates: Tuple[float, float]
    space_tag: str = TORUS

    def __post_init__(self):
        if len(self.coordinates) != 2:
            raise PreconditionError("a point has exactly two coordinates")
        coords = tuple(float(c) for c in self.coordinates)
        if self.space_tag == TORUS:
            # canonical representative in [0,1)^2
            coords = tuple(_unit_interval(c) for c in coords)
        object.__setattr__(self, "coordinates", coords)

    @classmethod
    def of(cls, xy: Iterable[float], space: PhaseSpace) -> "Point":
        return cls(tuple(xy), space.tag)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coordinates, dtype=float)

    def __iter__(self):
        return iter(self.coordinates)
