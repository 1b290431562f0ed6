"""
Orbit iteration, derivative cocycles, finite-time Lyapunov data and Birkhoff
sums for maps of flat 2D phase spaces.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Sequence, Tuple

import numpy as np

from models import (DegenerateCocycle, MapSystem, OrbitEscape, Point, PreconditionError,
                    SplittingDegenerate, TestFunctionFamily)
from models.pesin_types import angle_between

logger = logging.getLogger(__name__)

TAU_INV = 1e-9
SPLITTING_MIN_ANGLE = 1e-6
_GENERIC = np.array([math.cos(0.3 + math.sqrt(2.0)), math.sin(0.3 + math.sqrt(2.0))])

IntMatrix = Tuple[Tuple[int, int], Tuple[int, int]]


def _checked(xy: np.ndarray, step: int) -> np.ndarray:
    if not np.all(np.isfinite(xy)):
        raise OrbitEscape(step)
    return xy


def iterate_array(system: MapSystem, xy, n: int) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    if system.linear_toral and abs(n) > 1:
        return _toral_iterate(system, xy, n)
    advance = system.step if n >= 0 else system.step_back
    for k in range(1, abs(n) + 1):
        xy = _checked(advance(xy), k)
    return xy


def toral_power(matrix: IntMatrix, n: int) -> List[List[int]]:
    """Integer matrix A^n by repeated squaring; negative n uses the unimodular inverse."""
    (a, b), (c, d) = matrix
    det = a * d - b * c
    if n < 0:
        if abs(det) != 1:
            raise PreconditionError("only unimodular toral matrices have integer inverses")
        a, b, c, d = det * d, -det * b, -det * c, det * a
        n = -n
    result = [[1, 0], [0, 1]]
    base = [[a, b], [c, d]]
    while n:
        if n & 1:
            result = _int_product(result, base)
        base = _int_product(base, base)
        n >>= 1
    return result


def _int_product(p: List[List[int]], q: List[List[int]]) -> List[List[int]]:
    return [[p[i][0] * q[0][j] + p[i][1] * q[1][j] for j in range(2)] for i in range(2)]


def _toral_iterate(system: MapSystem, xy: np.ndarray, n: int) -> np.ndarray:
    """A^n x mod 1 in rational arithmetic from the binary value of x."""
    if not np.all(np.isfinite(xy)):
        raise OrbitEscape(1)
    power = toral_power(system.toral_matrix, n)
    x = [Fraction(float(c)) for c in xy]
    image = [(power[i][0] * x[0] + power[i][1] * x[1]) % 1 for i in range(2)]
    return system.space.wrap(np.array([float(c) for c in image]))


def toral_power_in_frame(matrix: IntMatrix, basis: np.ndarray, n: int) -> np.ndarray:
    """
    A^n read in the frame ``basis`` (columns), assembled from the eigenbasis of
    A so the contracting entry keeps its relative precision for large n.
    """
    values, vectors = np.linalg.eig(np.array(matrix, dtype=float))
    if np.iscomplexobj(values):
        raise PreconditionError("toral matrix is not hyperbolic")
    w = np.linalg.solve(basis, vectors)
    return (w * values ** n) @ np.linalg.inv(w)


def iterate(system: MapSystem, x: Point, n: int) -> Point:
    return Point.of(iterate_array(system, x.array, n), system.space)


def orbit(system: MapSystem, xy, n: int) -> np.ndarray:
    """Array of shape (n, 2): x, f(x), ..., f^{n-1}(x)."""
    pts = np.empty((n, 2))
    cur = _checked(np.asarray(xy, dtype=float), 0)
    for k in range(n):
        pts[k] = cur
        if k + 1 < n:
            cur = _checked(system.step(cur), k + 1)
    return pts


def backward_orbit(system: MapSystem, xy, n: int) -> np.ndarray:
    """Array of shape (n+1, 2): x, f^{-1}(x), ..., f^{-n}(x)."""
    pts = np.empty((n + 1, 2))
    pts[0] = _checked(np.asarray(xy, dtype=float), 0)
    for k in range(1, n + 1):
        pts[k] = _checked(system.step_back(pts[k - 1]), k)
    return pts


@dataclass(frozen=True)
class FactoredCocycle:
    """
    Df^n_x = Q R with Q orthogonal and R = diag(e^l1, e^l2) [[1, a], [0, 1]].

    The logarithmic diagonal keeps the product finite for long orbits.
    """
    q: np.ndarray
    log_diag: Tuple[float, float]
    shear: float
    steps: int

    def matrix(self) -> np.ndarray:
        l1, l2 = self.log_diag
        r = np.array([[math.exp(l1), self.shear * math.exp(l1)], [0.0, math.exp(l2)]])
        return self.q @ r

    @property
    def log_abs_det(self) -> float:
        return self.log_diag[0] + self.log_diag[1]

    def log_singular_values(self) -> Tuple[float, float]:
        l1, l2 = self.log_diag
        a = self.shear
        c = max(l1 + 0.5 * math.log1p(a * a), l2)
        t = math.exp(2 * (l1 - c)) * (1 + a * a) + math.exp(2 * (l2 - c))
        d = math.exp(l1 + l2 - 2 * c)
        big = 0.5 * (t + math.sqrt(max(t * t - 4 * d * d, 0.0)))
        log_big = c + 0.5 * math.log(big)
        return log_big, l1 + l2 - log_big


def _qr_positive(b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(b)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, (r.T * signs).T


def accumulate(jacobians: Sequence[np.ndarray]) -> FactoredCocycle:
    """Factored product J_{n-1} ... J_0 of a sequence of 2x2 matrices."""
    q = np.eye(2)
    l1 = l2 = 0.0
    shear = 0.0
    for step, jac in enumerate(jacobians):
        if not np.all(np.isfinite(jac)) or abs(np.linalg.det(jac)) == 0.0:
            raise DegenerateCocycle(step)
        q, r = _qr_positive(jac @ q)
        p11, p12, p22 = r[0, 0], r[0, 1], r[1, 1]
        if p11 == 0.0 or p22 == 0.0:
            raise DegenerateCocycle(step)
        shear = shear + (p12 / p11) * math.exp(min(l2 - l1, 700.0))
        l1 += math.log(p11)
        l2 += math.log(p22)
    return FactoredCocycle(q, (l1, l2), shear, len(jacobians))


def cocycle(system: MapSystem, x: Point, n: int) -> FactoredCocycle:
    if n < 1:
        raise PreconditionError("cocycle needs n >= 1")
    pts = orbit(system, x.array, n)
    return accumulate([np.asarray(system.jacobian(p), dtype=float) for p in pts])


def cocycle_matrix(system: MapSystem, xy, n: int) -> np.ndarray:
    """Plain product Df^n at xy; meant for short return times."""
    m = np.eye(2)
    cur = np.asarray(xy, dtype=float)
    for k in range(n):
        jac = np.asarray(system.jacobian(cur), dtype=float)
        if not np.all(np.isfinite(jac)) or np.linalg.det(jac) == 0.0:
            raise DegenerateCocycle(k)
        m = jac @ m
        if k + 1 < n:
            cur = _checked(system.step(cur), k + 1)
    return m


def finite_time_exponents(system: MapSystem, x: Point, n: int) -> Tuple[float, float]:
    """(chi+_n, chi-_n) from the singular values of the factored cocycle."""
    log_hi, log_lo = cocycle(system, x, n).log_singular_values()
    return log_hi / n, log_lo / n


@dataclass(frozen=True)
class Splitting:
    e_s: Tuple[float, float]
    e_u: Tuple[float, float]
    angle: float

    def __iter__(self):
        return iter((self.e_s, self.e_u))


def _canonical(v: np.ndarray) -> Tuple[float, float]:
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return float(v[0]), float(v[1])


def oseledec_splitting_estimate(system: MapSystem, x: Point, n_back: int, n_fwd: int) -> Splitting:
    """
    e_u pushes a generic vector forward from f^{-n_back}x to x; e_s pulls one
    back from f^{n_fwd}x to x.
    """
    if n_back < 1 or n_fwd < 1:
        raise PreconditionError("n_back and n_fwd must be >= 1")
    past = backward_orbit(system, x.array, n_back)
    v = _GENERIC.copy()
    for j in range(n_back, 0, -1):
        v = np.asarray(system.jacobian(past[j]), dtype=float) @ v
        v /= np.linalg.norm(v)
    e_u = _canonical(v)

    future = orbit(system, x.array, n_fwd + 1)
    w = _GENERIC.copy()
    for k in range(n_fwd, 0, -1):
        jac = np.asarray(system.jacobian(future[k - 1]), dtype=float)
        if np.linalg.det(jac) == 0.0:
            raise DegenerateCocycle(k - 1)
        w = np.linalg.solve(jac, w)
        w /= np.linalg.norm(w)
    e_s = _canonical(w)

    angle = angle_between(e_s, e_u)
    if angle < SPLITTING_MIN_ANGLE:
        raise SplittingDegenerate(angle)
    return Splitting(e_s, e_u, angle)


def birkhoff_sum(system: MapSystem, x: Point, n: int, phi: Callable[[np.ndarray], float]) -> float:
    """Unnormalised sum of phi along x, ..., f^{n-1}(x)."""
    if n < 1:
        raise PreconditionError("birkhoff_sum needs n >= 1")
    return math.fsum(float(phi(p)) for p in orbit(system, x.array, n))


def birkhoff_sums(system: MapSystem, xy, n: int, family: TestFunctionFamily, s: int) -> np.ndarray:
    """Sums of phi_1..phi_s over the first n orbit points."""
    return orbit_sums(orbit(system, xy, n), family, s)


def orbit_sums(points: np.ndarray, family: TestFunctionFamily, s: int) -> np.ndarray:
    values = family.evaluate(points, s)
    return np.array([math.fsum(values[:, i]) for i in range(s)])
