import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True)
class TestFunction:
    """Continuous observable with declared sup-norm and Lipschitz constant."""
    __test__ = False

    evaluator: Callable[[np.ndarray], float]
    sup_norm: float
    lipschitz: float
    label: str = ""
    # integer frequency of a Fourier cosine, empty otherwise
    mode: Tuple[int, ...] = ()

    def __call__(self, xy: np.ndarray) -> float:
        return float(self.evaluator(xy))


@dataclass(frozen=True)
class TestFunctionFamily:
    """Ordered family phi_1..phi_s."""
    __test__ = False

    functions: Tuple[TestFunction, ...]

    def __post_init__(self):
        if not self.functions:
            raise PreconditionError("a test-function family cannot be empty")
        object.__setattr__(self, "functions", tuple(self.functions))

    @property
    def count(self) -> int:
        return len(self.functions)

    def head(self, s: int) -> Tuple[TestFunction, ...]:
        if s < 1 or s > self.count:
            raise PreconditionError(f"s = {s} outside 1..{self.count}")
        return self.functions[:s]

    def max_sup_norm(self, s: int) -> float:
        return max(f.sup_norm for f in self.head(s))

    def max_lipschitz(self, s: int) -> float:
        return max(f.lipschitz for f in self.head(s))

    def evaluate(self, points: np.ndarray, s: int) -> np.ndarray:
        """Matrix of shape (len(points), s) with phi_i at each point."""
        pts = np.atleast_2d(points)
        return np.array([[f(p) for f in self.head(s)] for p in pts], dtype=float)

    @property
    def labels(self) -> List[str]:
        return [f.label for f in self.functions]


def fourier_modes(k_max: int) -> List[Tuple[int, int]]:
    """
    Frequencies k with 0 < |k|_inf <= k_max, one per +-k pair, ordered by
    |k|_1, then by descending k1 and descending k2.
    """
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    modes = []
    for k1 in range(0, k_max + 1):
        for k2 in range(-k_max, k_max + 1):
            if k1 == 0 and k2 <= 0:
                continue
            modes.append((k1, k2))
    return sorted(modes, key=lambda k: (abs(k[0]) + abs(k[1]), -k[0], -k[1]))


def cosine_mode(k: Sequence[int]) -> TestFunction:
    k1, k2 = int(k[0]), int(k[1])
    freq = 2.0 * math.pi * np.array([k1, k2], dtype=float)

    def phi(xy: np.ndarray) -> float:
        return math.cos(float(freq @ np.asarray(xy, dtype=float)))

    return TestFunction(phi, 1.0, 2.0 * math.pi * math.hypot(k1, k2), f"cos2pi({k1},{k2})", (k1, k2))


def constant_function(c: float) -> TestFunction:
    return TestFunction(lambda xy: c, abs(c), 0.0, f"const({c})")


def fourier_family(k_max: int = 1, modes: Sequence[Sequence[int]] = ()) -> TestFunctionFamily:
    chosen = [tuple(m) for m in modes] if modes else fourier_modes(k_max)
    return TestFunctionFamily(tuple(cosine_mode(k) for k in chosen))
