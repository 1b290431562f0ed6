import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ChartDegenerate, PreconditionError
from .phase_space import PhaseSpace, Point

STABLE = "stable"
UNSTABLE = "unstable"
EXACT_AFFINE = "exact-affine"
SAMPLED = "sampled-boundary"

Vector = Tuple[float, float]


def unit(v) -> Vector:
    arr = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise PreconditionError("cannot normalise the zero vector")
    return (float(arr[0] / norm), float(arr[1] / norm))


def angle_between(a, b) -> float:
    """Angle in [0, pi/2] between the lines spanned by a and b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = abs(float(a @ b)) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return math.acos(min(1.0, c))


@dataclass(frozen=True)
class PesinCertificate:
    """Finite-horizon membership certificate of a point in a Pesin set."""
    base_point: Point
    horizon: int
    chi: float
    ell: float
    splitting: Tuple[Vector, Vector]
    angle: float

    def __post_init__(self):
        if self.horizon < 1:
            raise PreconditionError("horizon must be >= 1")
        if self.chi <= 0:
            raise PreconditionError("chi must be > 0")
        if self.ell < 1:
            raise PreconditionError("ell must be >= 1")

    def in_pesin_set(self, ell0: float) -> bool:
        return self.ell <= ell0

    def to_dict(self) -> dict:
        return {
            "base_point": list(self.base_point.coordinates),
            "space": self.base_point.space_tag,
            "horizon": self.horizon,
            "chi": self.chi,
            "ell": self.ell,
            "splitting": [list(self.splitting[0]), list(self.splitting[1])],
            "angle": self.angle,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PesinCertificate":
        return cls(
            base_point=Point(tuple(data["base_point"]), data["space"]),
            horizon=int(data["horizon"]),
            chi=float(data["chi"]),
            ell=float(data["ell"]),
            splitting=(tuple(data["splitting"][0]), tuple(data["splitting"][1])),
            angle=float(data["angle"]),
        )


@dataclass(frozen=True, eq=False)
class Rectangle:
    """
    Chart box c(u, v) = center + scale*(u*e_s + v*e_u) over [-h, h]^2.
    """
    center: Point
    h: float
    frame: Tuple[Vector, Vector]
    scale: float
    space: PhaseSpace
    min_angle: float = 0.0

    def __post_init__(self):
        if not 0 < self.h <= 1:
            raise PreconditionError(f"half-width h = {self.h} outside (0, 1]")
        if self.scale <= 0:
            raise PreconditionError("scale must be > 0")
        if angle_between(*self.frame) < self.min_angle:
            raise ChartDegenerate("frame angle below the certificate bound")
        if self.space.is_torus and self.scale * self.h * self._frame_norm() >= 0.5:
            raise ChartDegenerate("chart is not injective on the torus")
        if abs(np.linalg.det(self.basis)) < 1e-12:
            raise ChartDegenerate("frame vectors are collinear")

    def _frame_norm(self) -> float:
        return float(np.linalg.norm(self.frame[0]) + np.linalg.norm(self.frame[1]))

    @property
    def basis(self) -> np.ndarray:
        """Columns e_s, e_u."""
        return np.column_stack([self.frame[0], self.frame[1]])

    @property
    def chart_matrix(self) -> np.ndarray:
        return self.scale * self.basis

    @property
    def chart_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.chart_matrix)

    def from_chart(self, uv) -> np.ndarray:
        return self.space.wrap(self.center.array + self.chart_matrix @ np.asarray(uv, dtype=float))

    def to_chart(self, xy) -> np.ndarray:
        return self.chart_inverse @ self.space.displacement(self.center.array, xy)

    def in_core(self, uv) -> bool:
        return bool(np.all(np.abs(np.asarray(uv)) <= self.h / 2.0))

    def contains(self, uv, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(uv)) <= self.h + tol))

    def vertices(self) -> np.ndarray:
        h = self.h
        return np.array([self.from_chart(p) for p in ((-h, -h), (h, -h), (h, h), (-h, h))])

    def diameter(self) -> float:
        v = self.vertices()
        return max(self.space.distance(v[i], v[j]) for i in range(4) for j in range(i + 1, 4))

    def to_dict(self) -> dict:
        return {
            "center": list(self.center.coordinates),
            "space": self.space.tag,
            "h": self.h,
            "frame": [list(self.frame[0]), list(self.frame[1])],
            "scale": self.scale,
        }


@dataclass(frozen=True, eq=False)
class ConeField:
    """Constant cones of slope width gamma around the chart axes."""
    rectangle: Rectangle
    gamma: float = 0.3

    def __post_init__(self):
        if not 0 < self.gamma < 0.5:
            raise PreconditionError("cone width gamma must lie in (0, 1/2)")

    def stable_extremes(self) -> np.ndarray:
        g = self.gamma
        return np.array([(1.0, g), (1.0, -g)])

    def unstable_extremes(self) -> np.ndarray:
        g = self.gamma
        return np.array([(g, 1.0), (-g, 1.0)])


@dataclass(frozen=True, eq=False)
class Cylinder:
    """
    Region between two admissible graphs in chart coordinates.

    A stable cylinder stretches across u in [-h, h] and is bounded by
    v = lower(u), v = upper(u); an unstable cylinder swaps the roles.
    Graphs are sampled on ``abscissa``; ``exact-affine`` cylinders have
    straight boundaries and two samples.
    """
    rectangle: Rectangle
    kind: str
    abscissa: Tuple[float, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    representation: str = SAMPLED

    def __post_init__(self):
        if self.kind not in (STABLE, UNSTABLE):
            raise PreconditionError(f"unknown cylinder kind '{self.kind}'")
        if self.representation not in (EXACT_AFFINE, SAMPLED):
            raise PreconditionError(f"unknown representation '{self.representation}'")
        for name in ("abscissa", "lower", "upper"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.abscissa) == len(self.lower) == len(self.upper) >= 2:
            raise PreconditionError("graphs need matching samples (at least two)")

    @classmethod
    def from_arrays(cls, rectangle: Rectangle, kind: str, lower, upper,
                    representation: str = SAMPLED) -> "Cylinder":
        t = np.linspace(-rectangle.h, rectangle.h, len(lower))
        return cls(rectangle, kind, tuple(t), tuple(lower), tuple(upper), representation)

    @property
    def t(self) -> np.ndarray:
        return np.array(self.abscissa)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def resolution(self) -> int:
        return len(self.abscissa)

    def graph(self, which: str, t) -> np.ndarray:
        values = self.lo if which == "lower" else self.hi
        return np.interp(t, self.t, values)

    def midline(self, t) -> np.ndarray:
        return 0.5 * (self.graph("lower", t) + self.graph("upper", t))

    def to_uv(self, t, y) -> np.ndarray:
        """Chart point from (abscissa, ordinate) in the cylinder's own axes."""
        if self.kind == STABLE:
            return np.array([t, y], dtype=float)
        return np.array([y, t], dtype=float)

    def split_uv(self, uv) -> Tuple[float, float]:
        if self.kind == STABLE:
            return float(uv[0]), float(uv[1])
        return float(uv[1]), float(uv[0])

    def width(self) -> float:
        return float(np.max(self.hi - self.lo))

    def min_width(self) -> float:
        return float(np.min(self.hi - self.lo))

    def lipschitz(self) -> float:
        dt = np.diff(self.t)
        return float(max(np.max(np.abs(np.diff(self.lo) / dt)), np.max(np.abs(np.diff(self.hi) / dt))))

    def is_admissible(self, gamma: float) -> bool:
        return self.lipschitz() <= gamma

    def crosses_fully(self, tol: float = 0.0) -> bool:
        """Graphs span the whole abscissa range and stay inside the rectangle."""
        h = self.rectangle.h
        spans = abs(self.abscissa[0] + h) <= tol and abs(self.abscissa[-1] - h) <= tol
        inside = np.all(self.lo >= -h - tol) and np.all(self.hi <= h + tol)
        return bool(spans and inside and np.all(self.hi >= self.lo - tol))

    def contains(self, uv, tol: float = 0.0) -> bool:
        t, y = self.split_uv(uv)
        if abs(t) > self.rectangle.h + tol:
            return False
        return bool(self.graph("lower", t) - tol <= y <= self.graph("upper", t) + tol)

    def contains_cylinder(self, other: "Cylinder", tol: float = 0.0) -> bool:
        return bool(np.all(other.graph("lower", self.t) >= self.lo - tol)
                    and np.all(other.graph("upper", self.t) <= self.hi + tol))

    def separation(self, other: "Cylinder") -> float:
        """Signed gap between two same-kind cylinders; negative when they overlap."""
        t = np.union1d(self.t, other.t)
        gap_above = other.graph("lower", t) - self.graph("upper", t)
        gap_below = self.graph("lower", t) - other.graph("upper", t)
        return float(max(np.min(gap_above), np.min(gap_below)))

    def grid(self, samples: int) -> np.ndarray:
        """samples x samples chart points filling the cylinder."""
        h = self.rectangle.h
        pts = []
        for t in np.linspace(-h, h, samples):
            lo, hi = float(self.graph("lower", t)), float(self.graph("upper", t))
            for y in np.linspace(lo, hi, samples):
                pts.append(self.to_uv(t, y))
        return np.array(pts)

    def boundary(self) -> np.ndarray:
        """Chart points along both graphs and the two closing edges."""
        pts = [self.to_uv(t, y) for t, y in zip(self.t, self.lo)]
        pts += [self.to_uv(t, y) for t, y in zip(self.t, self.hi)]
        for end in (0, -1):
            for y in np.linspace(self.lo[end], self.hi[end], 5)[1:-1]:
                pts.append(self.to_uv(self.t[end], y))
        return np.array(pts)

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """(u_min, u_max, v_min, v_max)."""
        t_min, t_max = float(self.t.min()), float(self.t.max())
        y_min, y_max = float(self.lo.min()), float(self.hi.max())
        if self.kind == STABLE:
            return t_min, t_max, y_min, y_max
        return y_min, y_max, t_min, t_max

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "representation": self.representation,
            "abscissa": list(self.abscissa),
            "lower": list(self.lower),
            "upper": list(self.upper),
        }

    @classmethod
    def from_dict(cls, rectangle: Rectangle, data: dict) -> "Cylinder":
        return cls(rectangle, data["kind"], tuple(data["abscissa"]), tuple(data["lower"]),
                   tuple(data["upper"]), data["representation"])


@dataclass(frozen=True)
class ConeCertificate:
    """Outcome of a cone-invariance check over a grid."""
    passed: bool
    margin: float
    image_width: float
    contraction: float
    samples: int
    witness: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "margin": self.margin,
            "image_width": self.image_width,
            "contraction": self.contraction,
            "samples": self.samples,
            "witness": [list(self.witness[0]), list(self.witness[1])] if self.witness else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConeCertificate":
        w = data.get("witness")
        return cls(data["passed"], data["margin"], data["image_width"], data["contraction"],
                   data["samples"], (tuple(w[0]), tuple(w[1])) if w else None)
