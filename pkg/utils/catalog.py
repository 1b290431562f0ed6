"""
Built-in maps: the cat map and its shear perturbation, the Chirikov standard
map, a planar rotation, a linear saddle and the piecewise-affine two-branch
fixture whose arithmetic is exact in binary floating point.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from models import MapSystem, PhaseSpace, Point, PreconditionError, Rectangle, ReferenceMeasure
from models.phase_space import PLANAR, TORUS
from models.test_functions import TestFunctionFamily
from .horseshoe import lyndon_words

logger = logging.getLogger(__name__)

TORUS_SPACE = PhaseSpace(TORUS)
CAT_MATRIX = ((2, 1), (1, 1))
_NAN2 = np.array([np.nan, np.nan])
_NAN22 = np.full((2, 2), np.nan)
INVERSE_TOL = 1e-15


def cat_map() -> MapSystem:
    a = np.array(CAT_MATRIX, dtype=float)
    a_inv = np.array([[1.0, -1.0], [-1.0, 2.0]])
    return MapSystem(
        name="cat",
        space=TORUS_SPACE,
        forward=lambda xy: a @ xy,
        inverse=lambda xy: a_inv @ xy,
        jacobian=lambda xy: a,
        toral_matrix=CAT_MATRIX,
        linear_toral=True,
    )


def perturbed_cat_map(kappa: float = 0.05) -> MapSystem:
    """x -> A x + kappa (sin 2 pi x2, 0) mod 1."""
    if not 0 <= kappa <= 0.1:
        raise PreconditionError("kappa must lie in [0, 0.1] to keep the cone field")
    two_pi = 2.0 * math.pi

    def forward(xy):
        x1, x2 = xy
        return np.array([2 * x1 + x2 + kappa * math.sin(two_pi * x2), x1 + x2])

    def inverse(xy):
        y1, y2 = xy
        # x2 - kappa sin(2 pi x2) = 2 y2 - y1 is monotone for 2 pi kappa < 1
        target = 2 * y2 - y1
        x2 = target
        if kappa > 0:
            x2 = brentq(lambda t: t - kappa * math.sin(two_pi * t) - target, target - kappa, target + kappa,
                        xtol=INVERSE_TOL)
        return np.array([y2 - x2, x2])

    def jacobian(xy):
        return np.array([[2.0, 1.0 + two_pi * kappa * math.cos(two_pi * xy[1])], [1.0, 1.0]])

    return MapSystem("perturbed_cat", TORUS_SPACE, forward, inverse, jacobian,
                     {"kappa": kappa}, toral_matrix=CAT_MATRIX)


def standard_map(k: float = 6.0) -> MapSystem:
    """Chirikov map on the unit torus: y' = y - K sin(2 pi x)/(2 pi), x' = x + y'."""
    two_pi = 2.0 * math.pi

    def forward(xy):
        x, y = xy
        y_new = y - k * math.sin(two_pi * x) / two_pi
        return np.array([x + y_new, y_new])

    def inverse(xy):
        x_new, y_new = xy
        x = x_new - y_new
        return np.array([x, y_new + k * math.sin(two_pi * x) / two_pi])

    def jacobian(xy):
        c = k * math.cos(two_pi * xy[0])
        return np.array([[1.0 - c, 1.0], [-c, 1.0]])

    return MapSystem("standard", TORUS_SPACE, forward, inverse, jacobian, {"K": k})


def rotation(theta: float = 0.5) -> MapSystem:
    c, s = math.cos(theta), math.sin(theta)
    r = np.array([[c, -s], [s, c]])
    return MapSystem("rotation", PhaseSpace(PLANAR, ((-1.0, 1.0), (-1.0, 1.0))),
                     lambda xy: r @ xy, lambda xy: r.T @ xy, lambda xy: r, {"theta": theta})


def linear_saddle(contraction: float = 0.25) -> MapSystem:
    d = np.diag([contraction, 1.0 / contraction])
    d_inv = np.diag([1.0 / contraction, contraction])
    return MapSystem("linear_saddle", PhaseSpace(PLANAR, ((-1.0, 1.0), (-1.0, 1.0))),
                     lambda xy: d @ xy, lambda xy: d_inv @ xy, lambda xy: d,
                     {"contraction": contraction}, piecewise_affine=True)


# --- piecewise-affine two-branch fixture -------------------------------------

FIXTURE_CENTER = (0.25, 0.25)
FIXTURE_RETURN_TIMES = (2, 3)
# dyadic offset of B1 from -c; keeps the two branch averages apart
FIXTURE_B1_SHIFT = (5 / 256, 5 / 256)
# local coordinates of the marked points of branches 1 and 2
FIXTURE_SEEDS = ((0.125, -0.5), (-0.125, 0.5))
# chart coordinates of the period-(1 2) point, where later stage rectangles sit
FIXTURE_BALANCED = (Fraction(2, 5), Fraction(-2, 5))
# (u, v) -> (alpha + u / 4, 4 (v + beta)) for the return of each branch
FIXTURE_RETURNS = {1: (Fraction(-1, 2), Fraction(1, 2)), 2: (Fraction(1, 2), Fraction(-1, 2))}


class _FixtureGeometry:
    """
    Boxes of half-size eps: R at c, B1 at -c + shift, B2 at -c - 4 eps e1, B3 at c - 4 eps e1.

    Branch 1: R -> B1 (translation), B1 -> R via (u, v) -> (-1/2 + u/4, 4(v + 1/2)).
    Branch 2: R -> B2 -> B3 (translations), B3 -> R via (u, v) -> (1/2 + u/4, 4(v - 1/2)).
    """

    def __init__(self, eps: float):
        self.eps = eps
        self.c = np.array(FIXTURE_CENTER)
        self.b1 = -self.c + np.array(FIXTURE_B1_SHIFT)
        self.b2 = -self.c - np.array([4 * eps, 0.0])
        self.b3 = self.c - np.array([4 * eps, 0.0])

    def local(self, xy, center) -> np.ndarray:
        return (np.asarray(xy, dtype=float) - center) / self.eps

    def _in(self, w, u_range=(-1.0, 1.0), v_range=(-1.0, 1.0)) -> bool:
        return u_range[0] <= w[0] <= u_range[1] and v_range[0] <= w[1] <= v_range[1]

    def forward_piece(self, xy) -> Optional[Tuple[str, np.ndarray]]:
        w = self.local(xy, self.c)
        if self._in(w, v_range=(-0.75, -0.25)):
            return "R>B1", w
        if self._in(w, v_range=(0.25, 0.75)):
            return "R>B2", w
        w = self.local(xy, self.b1)
        if self._in(w, v_range=(-0.75, -0.25)):
            return "B1>R", w
        w = self.local(xy, self.b2)
        if self._in(w, v_range=(0.25, 0.75)):
            return "B2>B3", w
        w = self.local(xy, self.b3)
        if self._in(w, v_range=(0.25, 0.75)):
            return "B3>R", w
        return None

    def forward(self, xy) -> np.ndarray:
        piece = self.forward_piece(xy)
        if piece is None:
            return _NAN2.copy()
        name, (u, v) = piece
        eps = self.eps
        if name == "R>B1":
            return self.b1 + eps * np.array([u, v])
        if name == "R>B2":
            return self.b2 + eps * np.array([u, v])
        if name == "B2>B3":
            return self.b3 + eps * np.array([u, v])
        if name == "B1>R":
            return self.c + eps * np.array([-0.5 + u / 4, 4 * (v + 0.5)])
        return self.c + eps * np.array([0.5 + u / 4, 4 * (v - 0.5)])

    def inverse(self, xy) -> np.ndarray:
        eps = self.eps
        u, v = self.local(xy, self.c)
        if self._in((u, v), u_range=(-0.75, -0.25)):
            return self.b1 + eps * np.array([4 * (u + 0.5), v / 4 - 0.5])
        if self._in((u, v), u_range=(0.25, 0.75)):
            return self.b3 + eps * np.array([4 * (u - 0.5), v / 4 + 0.5])
        w = self.local(xy, self.b1)
        if self._in(w, v_range=(-0.75, -0.25)):
            return self.c + eps * w
        w = self.local(xy, self.b3)
        if self._in(w, v_range=(0.25, 0.75)):
            return self.b2 + eps * w
        w = self.local(xy, self.b2)
        if self._in(w, v_range=(0.25, 0.75)):
            return self.c + eps * w
        return _NAN2.copy()

    def jacobian(self, xy) -> np.ndarray:
        piece = self.forward_piece(xy)
        if piece is None:
            return _NAN22.copy()
        if piece[0] in ("B1>R", "B3>R"):
            return np.diag([0.25, 4.0])
        return np.eye(2)


def affine_fixture(scale_exponent: int = 9) -> MapSystem:
    """Two-branch variable-time horseshoe with return times (2, 3) at scale 2^-k."""
    if scale_exponent < 4 or scale_exponent > 40:
        raise PreconditionError("scale_exponent must lie in 4..40")
    geometry = _FixtureGeometry(2.0 ** -scale_exponent)
    return MapSystem(
        name="affine_fixture",
        space=PhaseSpace(PLANAR, ((-0.5, 0.5), (-0.5, 0.5))),
        forward=geometry.forward,
        inverse=geometry.inverse,
        jacobian=geometry.jacobian,
        parameters={"scale_exponent": float(scale_exponent)},
        piecewise_affine=True,
    )


def fixture_scale(system: MapSystem) -> float:
    return 2.0 ** -int(system.parameters["scale_exponent"])


def fixture_boxes(system: MapSystem) -> Dict[str, np.ndarray]:
    """Centers of the boxes R, B1, B2 and B3."""
    geometry = _FixtureGeometry(fixture_scale(system))
    return {"R": geometry.c, "B1": geometry.b1, "B2": geometry.b2, "B3": geometry.b3}


def fixture_rectangle(system: MapSystem, stage: int = 1) -> Rectangle:
    """
    Stage 1 is the whole box R. Stage n >= 2 has half-width 2^-(n-1) around
    the period-(1 2) point, so only branches whose orbits mix both letters
    evenly return to it.
    """
    if stage < 1:
        raise PreconditionError("stage must be >= 1")
    eps = fixture_scale(system)
    center = np.array(FIXTURE_CENTER)
    h = 1.0
    if stage > 1:
        center = center + eps * np.array([float(c) for c in FIXTURE_BALANCED])
        h = 2.0 ** -(stage - 1)
    return Rectangle(Point(tuple(center), PLANAR), h, ((1.0, 0.0), (0.0, 1.0)), eps, system.space)


def fixture_seeds(system: MapSystem) -> Tuple[Point, ...]:
    rect = fixture_rectangle(system)
    return tuple(Point.of(rect.from_chart(w), system.space) for w in FIXTURE_SEEDS)


def fixture_cycle_point(word: Sequence[int]) -> Tuple[Fraction, Fraction]:
    """Exact chart point of R fixed by the returns of ``word`` applied in order."""
    su, bu, sv, bv = Fraction(1), Fraction(0), Fraction(1), Fraction(0)
    for a in word:
        alpha, beta = FIXTURE_RETURNS[a]
        su, bu = su / 4, alpha + bu / 4
        sv, bv = sv * 4, 4 * (bv + beta)
    return bu / (1 - su), bv / (1 - sv)


def fixture_periodic_seeds(system: MapSystem, rect: Rectangle, max_length: int) -> List[Point]:
    """Periodic points of every rotation of the Lyndon words up to max_length that sit in the core of rect."""
    eps = Fraction(fixture_scale(system))
    cx, cy = (Fraction(c) for c in FIXTURE_CENTER)
    words = sorted(lyndon_words(2, max_length), key=lambda w: (len(w), w))
    seeds, seen = [], set()
    for word in words:
        for k in range(len(word)):
            rotated = word[k:] + word[:k]
            if rotated in seen:
                continue
            seen.add(rotated)
            u, v = fixture_cycle_point(rotated)
            xy = (float(cx + eps * u), float(cy + eps * v))
            if rect.in_core(rect.to_chart(xy)):
                seeds.append(Point(xy, PLANAR))
    return seeds


# --- registry ---------------------------------------------------------------

_BUILDERS = {
    "cat": lambda p: cat_map(),
    "perturbed_cat": lambda p: perturbed_cat_map(p.get("kappa", 0.05)),
    "standard": lambda p: standard_map(p.get("K", 6.0)),
    "rotation": lambda p: rotation(p.get("theta", 0.5)),
    "linear_saddle": lambda p: linear_saddle(p.get("contraction", 0.25)),
    "affine_fixture": lambda p: affine_fixture(int(p.get("scale_exponent", 9))),
}


def build_map(name: str, parameters: Optional[Mapping[str, float]] = None) -> MapSystem:
    if name not in _BUILDERS:
        raise PreconditionError(f"unknown map '{name}'")
    return _BUILDERS[name](dict(parameters or {}))


# --- reference measures -----------------------------------------------------

def lebesgue_reference(family: TestFunctionFamily) -> ReferenceMeasure:
    """Lebesgue integrals of nonconstant Fourier modes vanish."""
    integrals = []
    for f in family.functions:
        if f.lipschitz == 0.0:
            integrals.append(f(np.zeros(2)))
        else:
            integrals.append(0.0)
    return ReferenceMeasure("lebesgue", tuple(integrals), 0.0, "analytic")


def _digit_characteristic(theta: float) -> float:
    """E exp(i theta u) for u = sum_j X_j 4^-j / 2 with independent fair signs X_j."""
    value, arg = 1.0, theta / 2
    while abs(arg) > 1e-12:
        value *= math.cos(arg)
        arg /= 4
    return value


def fixture_reference(system: MapSystem, family: TestFunctionFamily) -> ReferenceMeasure:
    """
    Integrals for the fair Bernoulli measure on the fixture horseshoe, lifted
    to its return-time suspension. A point of R has chart coordinates
    u = sum alpha(past) 4^-j and v = -sum beta(future) 4^-j, independent,
    with the box visits weighted 1 : 1/2 : 1/2 : 1/2 out of 5/2.
    """
    if system.name != "affine_fixture":
        raise PreconditionError(f"no fixture reference for map '{system.name}'")
    boxes = fixture_boxes(system)
    eps = fixture_scale(system)
    beta1, beta2 = (float(FIXTURE_RETURNS[a][1]) for a in (1, 2))
    integrals = []
    for f in family.functions:
        if f.lipschitz == 0.0:
            integrals.append(f(np.zeros(2)))
            continue
        if not f.mode:
            raise PreconditionError(f"test function '{f.label}' is not a Fourier mode")
        k = np.array(f.mode, dtype=float)
        t1, t2 = 2 * math.pi * eps * k
        phase = {name: np.exp(2j * math.pi * float(k @ center)) for name, center in boxes.items()}
        core = phase["R"] * _digit_characteristic(t1) * _digit_characteristic(t2)
        tails = 0.5 * _digit_characteristic(t1) * _digit_characteristic(t2 / 4) * (
            phase["B1"] * np.exp(-1j * t2 * beta1) + (phase["B2"] + phase["B3"]) * np.exp(-1j * t2 * beta2))
        integrals.append(float(((core + tails) / 2.5).real))
    return ReferenceMeasure("fixture-bernoulli", tuple(integrals), 0.0, "fixture")


def estimate_reference(system: MapSystem, family: TestFunctionFamily, length: int, seed: int,
                       batches: int = 100) -> ReferenceMeasure:
    """
    Long-orbit averages from a seeded start point; integral_error is three
    batch-means standard errors of the worst test function.
    """
    if length < batches:
        raise PreconditionError(f"orbit length {length} shorter than {batches} batches")
    rng = np.random.default_rng(seed)
    xy = system.space.sample(rng, 1)[0]
    per_batch = length // batches
    batch_means = np.empty((batches, family.count))
    for b in range(batches):
        acc = [[] for _ in range(family.count)]
        for _ in range(per_batch):
            for i, f in enumerate(family.functions):
                acc[i].append(f(xy))
            xy = system.step(xy)
        batch_means[b] = [math.fsum(a) / per_batch for a in acc]
    integrals = batch_means.mean(axis=0)
    stderr = batch_means.std(axis=0, ddof=1) / math.sqrt(batches)
    logger.info(f"Estimated reference for '{system.name}' over {per_batch * batches} steps, "
                f"max stderr {float(stderr.max()):.3e}")
    return ReferenceMeasure(f"{system.name}-long-orbit", tuple(float(v) for v in integrals),
                            float(3 * stderr.max()), "long-orbit", seed=seed,
                            length=per_batch * batches)


def build_reference(system: MapSystem, family: TestFunctionFamily,
                    settings: Dict[str, object]) -> ReferenceMeasure:
    provenance = settings.get("provenance", "analytic")
    if provenance == "fixture":
        return fixture_reference(system, family)
    if provenance == "analytic":
        return lebesgue_reference(family)
    return estimate_reference(system, family, int(settings.get("length", 10 ** 7)),
                              int(settings.get("seed", 0)))
