"""
Return maps read in a rectangle chart, g = c^-1 o f^m o c, and the graph
transfer that carries admissible cylinders through them.

Stable graphs are pulled back through g; unstable graphs are pulled back
through g^-1, which is the same computation with the chart axes swapped.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import newton

from models import ChartDegenerate, Cylinder, DegenerateCocycle, MapSystem, OrbitEscape, Rectangle
from models.pesin_types import EXACT_AFFINE, SAMPLED, STABLE, UNSTABLE
from .dynsys import iterate_array
from .pesin import chart_derivative

logger = logging.getLogger(__name__)

RESOLUTION = 65
NEWTON_TOL = 1e-14
NEWTON_ITERATIONS = 50
GRAPH_NOISE = 64.0

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class ChartReturn:
    """
    f^m read in the chart of ``rect``. When ``linear`` is set the return is
    the affine map uv -> linear @ uv + offset and no orbit is iterated.
    """
    system: MapSystem
    rect: Rectangle
    m: int
    linear: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None

    @classmethod
    def around(cls, system: MapSystem, rect: Rectangle, m: int, anchor_uv) -> "ChartReturn":
        """Return map of the branch through ``anchor_uv``; affine maps are fitted exactly there."""
        plain = cls(system, rect, m)
        if not system.affine_returns:
            return plain
        anchor = np.asarray(anchor_uv, dtype=float)
        linear = plain.derivative(anchor)
        return cls(system, rect, m, linear, plain(anchor) - linear @ anchor)

    @property
    def is_affine(self) -> bool:
        return self.linear is not None

    def __call__(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=float)
        if self.is_affine:
            return self.linear @ uv + self.offset
        return self.rect.to_chart(iterate_array(self.system, self.rect.from_chart(uv), self.m))

    def inverse(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=float)
        if self.is_affine:
            return np.linalg.solve(self.linear, uv - self.offset)
        return self.rect.to_chart(iterate_array(self.system, self.rect.from_chart(uv), -self.m))

    def derivative(self, uv) -> np.ndarray:
        if self.is_affine:
            return self.linear
        return chart_derivative(self.system, self.rect, self.rect.from_chart(uv), self.m)

    def inverse_derivative(self, uv) -> np.ndarray:
        if self.is_affine:
            return np.linalg.inv(self.linear)
        return np.linalg.inv(self.derivative(self.inverse(uv)))


def _polyline_slope(ts: np.ndarray, ys: np.ndarray, t: float) -> float:
    i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
    return float((ys[i + 1] - ys[i]) / (ts[i + 1] - ts[i]))


def _own_axes(kind: str, g: Callable, dg: Callable) -> Tuple[Callable, Callable]:
    """Express g in (abscissa, ordinate) coordinates of a cylinder of ``kind``."""
    if kind == STABLE:
        return g, dg
    return (lambda p: _SWAP @ g(_SWAP @ p)), (lambda p: _SWAP @ dg(_SWAP @ p) @ _SWAP)


def _affine_graph(linear: np.ndarray, offset: np.ndarray, target: Cylinder, which: str,
                  ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact preimage of a straight graph y = alpha + beta t under an affine map."""
    h = target.rectangle.h
    y0, y1 = float(target.graph(which, -h)), float(target.graph(which, h))
    beta = (y1 - y0) / (2 * h)
    alpha = (y0 + y1) / 2
    (a_tt, a_ty), (a_yt, a_yy) = linear
    c_t, c_y = offset
    ys = (alpha + beta * c_t - c_y + (beta * a_tt - a_yt) * ts) / (a_yy - beta * a_ty)
    image_ts = a_tt * ts + a_ty * ys + c_t
    return ys, image_ts


def graph_tolerance(rect: Rectangle) -> float:
    """Step tolerance of the graph solve: GRAPH_NOISE phase-space ulps read in chart units."""
    return max(NEWTON_TOL, GRAPH_NOISE * np.finfo(float).eps / rect.scale)


def _newton_graph(g: Callable, dg: Callable, target: Cylinder, which: str, ts: np.ndarray,
                  start: Tuple[float, float], tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve g_y(t, y) = target(g_t(t, y)) for y at every abscissa, continuing
    outward from the abscissa nearest ``start``.
    """
    tgt_t, tgt_y = target.t, target.lo if which == "lower" else target.hi

    def solve(t: float, seed: float) -> float:
        def residual(y: float) -> float:
            img = g(np.array([t, y]))
            return img[1] - float(np.interp(img[0], tgt_t, tgt_y))

        def d_residual(y: float) -> float:
            p = np.array([t, y])
            jac = dg(p)
            d_res = jac[1, 1] - _polyline_slope(tgt_t, tgt_y, g(p)[0]) * jac[0, 1]
            if d_res == 0.0 or not np.isfinite(d_res):
                raise ChartDegenerate("graph transfer has a vanishing derivative")
            return d_res

        y, info = newton(residual, seed, fprime=d_residual, tol=tol, maxiter=NEWTON_ITERATIONS,
                         full_output=True, disp=False)
        if not info.converged or not np.isfinite(y):
            raise ChartDegenerate(f"graph transfer did not converge at t = {t:.6g}")
        return float(y)

    ys = np.empty_like(ts)
    first = int(np.argmin(np.abs(ts - start[0])))
    ys[first] = solve(ts[first], start[1])
    for i in range(first + 1, len(ts)):
        ys[i] = solve(ts[i], ys[i - 1])
    for i in range(first - 1, -1, -1):
        ys[i] = solve(ts[i], ys[i + 1])
    image_ts = np.array([g(np.array([t, y]))[0] for t, y in zip(ts, ys)])
    return ys, image_ts


@dataclass(frozen=True)
class GraphTransfer:
    cylinder: Cylinder
    overhang: float

    def crosses(self, tol: float = 0.0) -> bool:
        """Images of the new graphs stay inside the target's abscissa range."""
        return self.overhang <= self.cylinder.rectangle.h + tol and self.cylinder.crosses_fully(tol)


def _transfer(ret: ChartReturn, target: Cylinder, forward: bool, anchor,
              resolution: int) -> GraphTransfer:
    kind = target.kind
    rect = ret.rect
    if forward:
        g, dg = ret.__call__, ret.derivative
    else:
        g, dg = ret.inverse, ret.inverse_derivative
    g_own, dg_own = _own_axes(kind, g, dg)
    anchor_own = np.asarray(anchor, dtype=float)
    if kind == UNSTABLE:
        anchor_own = _SWAP @ anchor_own

    if ret.is_affine and target.representation == EXACT_AFFINE:
        ts = np.array([-rect.h, rect.h])
        linear = dg_own(anchor_own)
        offset = g_own(np.zeros(2))
        lo, lo_img = _affine_graph(linear, offset, target, "lower", ts)
        hi, hi_img = _affine_graph(linear, offset, target, "upper", ts)
        representation = EXACT_AFFINE
    else:
        ts = np.linspace(-rect.h, rect.h, resolution)
        start = (float(anchor_own[0]), float(anchor_own[1]))
        try:
            tol = graph_tolerance(rect)
            lo, lo_img = _newton_graph(g_own, dg_own, target, "lower", ts, start, tol)
            hi, hi_img = _newton_graph(g_own, dg_own, target, "upper", ts, start, tol)
        except (OrbitEscape, DegenerateCocycle, np.linalg.LinAlgError) as e:
            raise ChartDegenerate(f"graph transfer left the domain: {e}")
        representation = SAMPLED
    lower, upper = np.minimum(lo, hi), np.maximum(lo, hi)
    overhang = float(max(np.max(np.abs(lo_img)), np.max(np.abs(hi_img))))
    return GraphTransfer(Cylinder(rect, kind, tuple(ts), tuple(lower), tuple(upper), representation),
                         overhang)


def pull_stable(ret: ChartReturn, target: Cylinder, anchor, resolution: int = RESOLUTION) -> GraphTransfer:
    """Stable cylinder g^-1(target) across the full u range."""
    if target.kind != STABLE:
        raise ChartDegenerate("pull_stable needs a stable target")
    return _transfer(ret, target, True, anchor, resolution)


def push_unstable(ret: ChartReturn, target: Cylinder, anchor, resolution: int = RESOLUTION) -> GraphTransfer:
    """Unstable cylinder {q : g^-1(q) in target} across the full v range."""
    if target.kind != UNSTABLE:
        raise ChartDegenerate("push_unstable needs an unstable target")
    return _transfer(ret, target, False, anchor, resolution)


def full_cylinder(rect: Rectangle, kind: str) -> Cylinder:
    """The whole rectangle viewed as a cylinder of ``kind``."""
    h = rect.h
    return Cylinder(rect, kind, (-h, h), (-h, -h), (h, h), EXACT_AFFINE)
