from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Tuple

import numpy as np

from .errors import PreconditionError
from .phase_space import PhaseSpace

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MapSystem:
    """
    Invertible map of a flat 2D phase space with an evaluable Jacobian.

    ``forward``, ``inverse`` and ``jacobian`` act on raw coordinate arrays of
    shape (2,); a map that is undefined at a point returns NaN coordinates.
    ``toral_matrix`` is the integer matrix of the linear part when the map is a
    (possibly perturbed) toral automorphism; it drives periodic seeding.
    ``piecewise_affine`` marks maps whose chart returns are affine on each
    branch, so cylinders can be carried exactly. ``linear_toral`` marks the
    unperturbed automorphism x -> A x mod 1: its iterates and derivatives are
    computed in exact arithmetic and its chart returns are affine.
    """
    name: str
    space: PhaseSpace
    forward: ArrayMap
    inverse: ArrayMap
    jacobian: ArrayMap
    parameters: Mapping[str, float] = field(default_factory=dict)
    toral_matrix: Optional[Tuple[Tuple[int, int], Tuple[int, int]]] = None
    piecewise_affine: bool = False
    linear_toral: bool = False

    def __post_init__(self):
        if not self.name:
            raise PreconditionError("a map needs a name")
        if self.linear_toral and self.toral_matrix is None:
            raise PreconditionError("a linear toral map needs its toral matrix")

    @property
    def affine_returns(self) -> bool:
        return self.piecewise_affine or self.linear_toral

    def step(self, xy: np.ndarray) -> np.ndarray:
        return self.space.wrap(self.forward(xy))

    def step_back(self, xy: np.ndarray) -> np.ndarray:
        return self.space.wrap(self.inverse(xy))

    def describe(self) -> dict:
        return {"name": self.name, "space": self.space.tag, "parameters": dict(self.parameters)}
