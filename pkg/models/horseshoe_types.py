from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

from .branch_types import HyperbolicBranch
from .map_system import MapSystem
from .errors import PreconditionError
from .pesin_types import Cylinder, Rectangle

FORWARD = "forward"
BACKWARD = "backward"
PERIODIC = "periodic"

Word = Tuple[int, ...]


@dataclass(frozen=True)
class SymbolicWord:
    """Finite word over the branch alphabet {1..N}."""
    letters: Word
    kind: str = PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))
        if not self.letters:
            raise PreconditionError("a symbolic word cannot be empty")
        if self.kind not in (FORWARD, BACKWARD, PERIODIC):
            raise PreconditionError(f"unknown word kind '{self.kind}'")
        if min(self.letters) < 1:
            raise PreconditionError("letters start at 1")

    def __len__(self) -> int:
        return len(self.letters)

    def check_alphabet(self, n: int) -> None:
        if max(self.letters) > n:
            raise PreconditionError(f"letter {max(self.letters)} outside alphabet 1..{n}")

    def repeated(self, length: int) -> Word:
        """The word read cyclically for ``length`` letters."""
        k = len(self.letters)
        return tuple(self.letters[i % k] for i in range(length))

    def rotated(self, shift: int) -> "SymbolicWord":
        k = len(self.letters)
        r = shift % k
        return SymbolicWord(self.letters[r:] + self.letters[:r], self.kind)

    def label(self) -> str:
        return "".join(str(a) for a in self.letters) if max(self.letters) < 10 else \
            "-".join(str(a) for a in self.letters)


@dataclass(frozen=True, eq=False)
class VariableTimeHorseshoe:
    branches: Tuple[HyperbolicBranch, ...]
    rectangle: Rectangle
    crossing_matrix: Tuple[Tuple[bool, ...], ...]
    contraction: float
    system: MapSystem
    degenerate: bool = False

    @property
    def n(self) -> int:
        return len(self.branches)

    @property
    def return_times(self) -> Tuple[int, ...]:
        return tuple(b.return_time for b in self.branches)

    def branch(self, letter: int) -> HyperbolicBranch:
        return self.branches[letter - 1]

    def period(self, letters: Sequence[int]) -> int:
        return sum(self.branch(a).return_time for a in letters)

    def to_dict(self) -> dict:
        return {
            "map": self.system.describe(),
            "rectangle": self.rectangle.to_dict(),
            "return_times": list(self.return_times),
            "crossing_matrix": [list(row) for row in self.crossing_matrix],
            "contraction": self.contraction,
            "degenerate": self.degenerate,
            "branches": [b.to_dict() for b in self.branches],
        }


@dataclass(frozen=True, eq=False)
class CylinderRefinement:
    depth: int
    stable_cylinders: Dict[Word, Cylinder]
    unstable_cylinders: Dict[Word, Cylinder]
    max_diameters: Tuple[float, float]
    widths_by_depth: Tuple[Tuple[float, float], ...] = ()

    def rows(self):
        """Flat records for CSV export."""
        for kind, table in (("stable", self.stable_cylinders), ("unstable", self.unstable_cylinders)):
            for word in sorted(table):
                cyl = table[word]
                u0, u1, v0, v1 = cyl.bounding_box()
                yield {
                    "word": "".join(str(a) for a in word),
                    "kind": kind,
                    "depth": len(word),
                    "u_min": u0, "u_max": u1, "v_min": v0, "v_max": v1,
                    "width": cyl.width(),
                }
