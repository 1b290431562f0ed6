"""
Returns to a rectangle, certified hyperbolic branches and quasi-generic
branch sets.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import root

from models import (BudgetExhausted, ConeFail, ConeField, CrossFail, Cylinder,
                    DiamFail, HyperbolicBranch, MapSystem, OrbitEscape, PesinCertificate, Point, PreconditionError,
                    QGCertificate, QGFail, QGResult, QuasiGenericityParams, Rectangle,
                    ReferenceMeasure, TestFunctionFamily, VarhorseError)
from models.pesin_types import STABLE, UNSTABLE
from .chart_return import RESOLUTION, ChartReturn, full_cylinder, pull_stable, push_unstable
from .dynsys import birkhoff_sums, iterate_array, toral_power
from .pesin import cone_preserved, pesin_certificate

logger = logging.getLogger(__name__)

DELTA_CAP = 0.1
TAU_BRANCH = 1e-7
QG_GRID = 5
PERIODIC_TOL = 1e-14


def delta_modulus(family: TestFunctionFamily, rho: float, s: int, cap: float = DELTA_CAP) -> float:
    """Distance below which every phi_i, i <= s, moves by less than rho/2."""
    if rho <= 0:
        raise PreconditionError("rho must be > 0")
    lip = family.max_lipschitz(s)
    if lip == 0.0:
        return cap
    return 0.99 * rho / (2.0 * lip)


def quasi_generic_point(system: MapSystem, x: Point, n: int, family: TestFunctionFamily,
                        reference: ReferenceMeasure, rho: float, s: int) -> QGResult:
    """(rho, s, n) check of the Birkhoff averages at x against the reference integrals."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    QuasiGenericityParams(rho, s).check_family(family.count)
    averages = birkhoff_sums(system, x.array, n, family, s) / n
    residuals = np.abs(averages - np.array(reference.head(s)))
    worst = int(np.argmax(residuals))
    max_residual = float(residuals[worst])
    passed = max_residual <= rho - reference.integral_error
    return QGResult(passed, max_residual, None if passed else worst + 1,
                    tuple(float(r) for r in residuals))


def _first_return(system: MapSystem, rect: Rectangle, z: Point, n_min: int, m_max: int) -> Optional[int]:
    xy = z.array
    try:
        for m in range(1, m_max + 1):
            xy = iterate_array(system, xy, 1)
            if m >= n_min and rect.in_core(rect.to_chart(xy)):
                return m
    except OrbitEscape:
        return None
    return None


def detect_returns(system: MapSystem, rect: Rectangle, seed_points: Sequence[Point], n_min: int,
                   m_max: int, threads: int = 1) -> List[Tuple[Point, int]]:
    """Smallest return time in [n_min, m_max] to the chart core, per seed, in input order."""
    for z in seed_points:
        if not rect.in_core(rect.to_chart(z.array)):
            raise PreconditionError(f"seed {z.coordinates} is outside the rectangle core")
    if m_max < n_min:
        return []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        times = list(executor.map(lambda z: _first_return(system, rect, z, n_min, m_max), seed_points))
    returns = [(z, m) for z, m in zip(seed_points, times) if m is not None]
    logger.debug(f"{len(returns)} of {len(seed_points)} seeds return within [{n_min}, {m_max}]")
    return returns


def diameter_profile(system: MapSystem, source: Cylinder, m: int) -> Tuple[float, ...]:
    """Phase-space diameters of f^j(S), j = 0..m-1, from the sampled boundary of S."""
    rect = source.rectangle
    pts = np.array([rect.from_chart(uv) for uv in source.boundary()])
    profile = []
    for j in range(m):
        if j:
            pts = np.array([iterate_array(system, p, 1) for p in pts])
        diff = pts[:, None, :] - pts[None, :, :]
        if system.space.is_torus:
            diff = diff - np.round(diff)
        profile.append(float(np.max(np.linalg.norm(diff, axis=-1))))
    return tuple(profile)


def _maps_onto(ret: ChartReturn, source: Cylinder, target: Cylinder, tol: float) -> bool:
    """g sends both boundary graphs of S onto the edges of U within ``tol``."""
    graphs = [source.to_uv(t, y) for t, y in zip(source.t, source.lo)]
    graphs += [source.to_uv(t, y) for t, y in zip(source.t, source.hi)]
    return all(target.contains(ret(uv), tol) for uv in graphs)


def certify_branch(system: MapSystem, rect: Rectangle, cones: ConeField, z: Point, m: int,
                   family: TestFunctionFamily, reference: ReferenceMeasure, rho: float, s: int,
                   samples: int = 33, resolution: int = RESOLUTION) -> HyperbolicBranch:
    """
    Builds S = g^-1(R) and U = g(S) around z and certifies, in order, the
    crossing, cone invariance, diameters below delta(rho, s) and
    quasi-genericity of z at rho/2. Every point of a 5x5 grid in S is then
    spot-checked at (rho, s, m).
    """
    z_uv = rect.to_chart(z.array)
    landing_xy = iterate_array(system, z.array, m)
    landing_uv = rect.to_chart(landing_xy)
    if not (rect.in_core(z_uv) and rect.in_core(landing_uv)):
        raise PreconditionError("z and f^m(z) must lie in the rectangle core")

    ret = ChartReturn.around(system, rect, m, z_uv)
    try:
        pulled = pull_stable(ret, full_cylinder(rect, STABLE), z_uv, resolution)
        pushed = push_unstable(ret, full_cylinder(rect, UNSTABLE), landing_uv, resolution)
    except VarhorseError as e:
        raise CrossFail(f"cylinders around z could not be built: {e}")
    source, target = pulled.cylinder, pushed.cylinder
    if not (pulled.crosses(TAU_BRANCH) and pushed.crosses(TAU_BRANCH)):
        raise CrossFail("source or target does not cross the rectangle fully")
    if not (source.is_admissible(cones.gamma) and target.is_admissible(cones.gamma)):
        raise CrossFail("cylinder boundaries steeper than the cone width")
    if not _maps_onto(ret, source, target, TAU_BRANCH):
        raise CrossFail("f^m(S) leaves U")

    cone = cone_preserved(system, source, m, cones, samples)
    if not cone.passed:
        raise ConeFail(f"cone margin {cone.margin:.3e}", cone.witness)

    delta = delta_modulus(family, rho, s)
    profile = diameter_profile(system, source, m)
    for j, diameter in enumerate(profile):
        if diameter > delta:
            raise DiamFail(j, diameter, delta)

    base = quasi_generic_point(system, z, m, family, reference, rho / 2, s)
    if not base.passed:
        raise QGFail(f"base residual {base.max_residual:.3e} above rho/2", base.witness_index)
    for uv in source.grid(QG_GRID):
        grid_point = Point.of(rect.from_chart(uv), system.space)
        check = quasi_generic_point(system, grid_point, m, family, reference, rho, s)
        if not check.passed:
            raise QGFail(f"grid point residual {check.max_residual:.3e} above rho", tuple(uv))

    logger.debug(f"Certified branch m={m} at {z.coordinates}: margin {cone.margin:.3e}, "
                 f"max diameter {max(profile):.3e} <= delta {delta:.3e}")
    return HyperbolicBranch(
        return_time=m,
        source=source,
        target=target,
        base_point=z,
        cone_certificate=cone,
        diameter_profile=profile,
        qg_certificate=QGCertificate(rho, s, delta, base.max_residual, max(profile)),
        landing_point=Point.of(landing_xy, system.space),
    )


# --- periodic seeds ---------------------------------------------------------

def _gauss_reduce(b1, b2):
    """Lagrange-Gauss reduction of a rational lattice basis."""
    def dot(a, b):
        return a[0] * b[0] + a[1] * b[1]

    if dot(b1, b1) > dot(b2, b2):
        b1, b2 = b2, b1
    while True:
        mu = round(dot(b1, b2) / dot(b1, b1))
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        if dot(b2, b2) >= dot(b1, b1):
            return b1, b2
        b1, b2 = b2, b1


def toral_periodic_points(system: MapSystem, rect: Rectangle, m: int) -> List[Point]:
    """
    Points of the lattice (A^m - I)^-1 Z^2 mod 1 inside the chart core, where
    A is the map's toral matrix.
    """
    if system.toral_matrix is None:
        raise PreconditionError(f"map '{system.name}' has no toral matrix")
    p = toral_power(system.toral_matrix, m)
    mat = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]]
    det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    if det == 0:
        return []
    # columns of the inverse span the lattice
    b1 = (Fraction(mat[1][1], det), Fraction(-mat[1][0], det))
    b2 = (Fraction(-mat[0][1], det), Fraction(mat[0][0], det))
    b1, b2 = _gauss_reduce(b1, b2)
    basis = np.array([[float(b1[0]), float(b2[0])], [float(b1[1]), float(b2[1])]])
    inv = np.linalg.inv(basis)
    center = rect.center.array
    radius = rect.scale * rect.h * float(np.linalg.norm(rect.frame[0]) + np.linalg.norm(rect.frame[1])) / 2
    coeff = inv @ center
    spans = [int(math.ceil(radius * np.linalg.norm(inv[i]))) + 1 for i in range(2)]
    found = []
    residues = set()
    for n1 in range(int(math.floor(coeff[0])) - spans[0], int(math.ceil(coeff[0])) + spans[0] + 1):
        for n2 in range(int(math.floor(coeff[1])) - spans[1], int(math.ceil(coeff[1])) + spans[1] + 1):
            x = (n1 * b1[0] + n2 * b2[0], n1 * b1[1] + n2 * b2[1])
            residue = (x[0] % 1, x[1] % 1)
            if residue in residues:
                continue
            residues.add(residue)
            xy = np.array([float(residue[0]), float(residue[1])])
            if rect.in_core(rect.to_chart(xy)):
                found.append(xy)
    return _refine_periodic(system, found, m)


def _refine_periodic(system: MapSystem, points: Sequence[np.ndarray], m: int) -> List[Point]:
    """Solves f^m(z) = z from each lattice point; lattice points are already exact for linear automorphisms."""
    if system.linear_toral:
        return [Point.of(xy, system.space) for xy in points]

    def residual(z):
        return system.space.displacement(z, iterate_array(system, z, m))

    def jacobian(z):
        jac, cur = np.eye(2), np.asarray(z, dtype=float)
        for _ in range(m):
            jac = np.asarray(system.jacobian(cur), dtype=float) @ jac
            cur = system.step(cur)
        return jac - np.eye(2)

    refined = []
    for xy in points:
        z = np.array(xy, dtype=float)
        try:
            sol = root(residual, z, jac=jacobian, method="hybr", tol=PERIODIC_TOL)
            if sol.success:
                z = system.space.wrap(sol.x)
        except (OrbitEscape, np.linalg.LinAlgError) as e:
            logger.debug(f"Periodic point near {tuple(z)} kept unrefined: {e}")
        refined.append(Point.of(z, system.space))
    return refined


def seed_points(system: MapSystem, rect: Rectangle, rng: np.random.Generator, count: int,
                m_max: int) -> List[Point]:
    """
    Candidate base points in the core: lattice periodic points for toral
    automorphisms (by increasing period), then seeded uniform core samples.
    """
    seeds: List[Point] = []
    if system.toral_matrix is not None:
        seen = set()
        for m in range(1, m_max + 1):
            # points of period m also have every multiple of m as a period
            for p in toral_periodic_points(system, rect, m):
                if p.coordinates not in seen:
                    seen.add(p.coordinates)
                    seeds.append(p)
            if len(seeds) >= count:
                break
    half = rect.h / 2
    for uv in rng.uniform(-half, half, size=(count, 2)):
        seeds.append(Point.of(rect.from_chart(uv), system.space))
    return seeds


# --- branch sets ------------------------------------------------------------

def _on_one_periodic_orbit(system: MapSystem, points: Sequence[Point], horizon: int,
                           tol: float = 1e-9) -> bool:
    first = points[0].array
    try:
        orbit_pts = [first]
        cur = first
        for _ in range(horizon):
            cur = iterate_array(system, cur, 1)
            if system.space.max_distance(cur, first) < tol:
                break
            orbit_pts.append(cur)
        else:
            return False
    except OrbitEscape:
        return False
    return all(any(system.space.max_distance(p.array, q) < tol for q in orbit_pts) for p in points)


def _disjoint(a: Cylinder, b: Cylinder, exact: bool) -> bool:
    gap = a.separation(b)
    return gap > 0 if exact else gap > 10 * TAU_BRANCH


def _separated(branch: HyperbolicBranch, accepted: Sequence[HyperbolicBranch], exact: bool) -> bool:
    return all(_disjoint(branch.source, b.source, exact) and _disjoint(branch.target, b.target, exact)
               for b in accepted)


def _attempt(args) -> Union[HyperbolicBranch, VarhorseError]:
    system, rect, cones, z, m, family, reference, rho, s, samples = args
    try:
        return certify_branch(system, rect, cones, z, m, family, reference, rho, s, samples)
    except VarhorseError as e:
        return e


def build_branch_set(system: MapSystem, rect: Rectangle, cones: ConeField, family: TestFunctionFamily,
                     reference: ReferenceMeasure, rho: float, s: int, n_target: int,
                     budget: Mapping[str, int], seeds: Sequence[Point], threads: int = 1,
                     landing: Optional[Mapping[str, float]] = None,
                     samples: int = 33) -> List[HyperbolicBranch]:
    """
    N >= n_target certified branches with pairwise disjoint sources and
    targets. A branch meeting an accepted one is iterated to its next return,
    which narrows its cylinders, for up to ``repair_iterations`` rounds.
    Candidates whose base point misses quasi-genericity at rho/2 are dropped
    before the geometric checks. ``landing`` ({horizon, chi, ell0}) requires
    a Pesin certificate at f^m(z), which is attached to the accepted branch.
    """
    if n_target < 2:
        raise PreconditionError("n_target must be >= 2")
    candidates_budget = int(budget.get("branch_candidates", 0))
    n_min, m_max = int(budget.get("n_min", 1)), int(budget.get("m_max", 20))
    repairs = int(budget.get("repair_iterations", 0))
    diagnostics: Dict[str, Any] = {"attempts": 0, "failures": {}, "found": 0, "repaired": 0}
    if candidates_budget <= 0:
        raise BudgetExhausted("no branch candidates allowed by the budget", diagnostics)

    core_seeds = [z for z in seeds if rect.in_core(rect.to_chart(z.array))]
    candidates = detect_returns(system, rect, core_seeds, n_min, m_max, threads)[:candidates_budget]
    exact = system.affine_returns
    accepted: List[HyperbolicBranch] = []

    def record_failure(stage: str) -> None:
        diagnostics["failures"][stage] = diagnostics["failures"].get(stage, 0) + 1

    candidates = _prescreen(system, candidates, family, reference, rho, s, threads, record_failure)

    chunk = max(1, threads)
    with ThreadPoolExecutor(max_workers=chunk) as executor:
        for start in range(0, len(candidates), chunk):
            batch = candidates[start:start + chunk]
            args = [(system, rect, cones, z, m, family, reference, rho, s, samples) for z, m in batch]
            for (z, m), outcome in zip(batch, executor.map(_attempt, args)):
                diagnostics["attempts"] += 1
                if isinstance(outcome, VarhorseError):
                    record_failure(getattr(outcome, "stage", type(outcome).__name__))
                    logger.debug(f"Candidate {z.coordinates} m={m} rejected: {outcome}")
                    continue
                branch = _repair(system, rect, cones, outcome, accepted, family, reference, rho, s,
                                 m_max, repairs, exact, samples, diagnostics)
                if branch is None:
                    continue
                if landing is not None:
                    cert = _landing_certificate(system, branch.base_point, branch.m, landing)
                    if cert is None:
                        record_failure("landing")
                        continue
                    branch = replace(branch, pesin_certificate=cert)
                if len(accepted) + 1 >= n_target and _on_one_periodic_orbit(
                        system, [b.base_point for b in accepted] + [branch.base_point], m_max):
                    record_failure("atomic")
                    continue
                accepted.append(branch)
                diagnostics["found"] = len(accepted)
                if len(accepted) >= n_target:
                    logger.info(f"Branch set complete: return times {[b.m for b in accepted]}")
                    return accepted
    raise BudgetExhausted(f"found {len(accepted)} of {n_target} branches", diagnostics)


def _prescreen(system: MapSystem, candidates: Sequence[Tuple[Point, int]], family: TestFunctionFamily,
               reference: ReferenceMeasure, rho: float, s: int, threads: int,
               record_failure) -> List[Tuple[Point, int]]:
    def passes(candidate) -> bool:
        z, m = candidate
        try:
            return quasi_generic_point(system, z, m, family, reference, rho / 2, s).passed
        except OrbitEscape:
            return False

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        verdicts = list(executor.map(passes, candidates))
    kept = [c for c, ok in zip(candidates, verdicts) if ok]
    for _ in range(len(candidates) - len(kept)):
        record_failure(QGFail.stage)
    logger.debug(f"{len(kept)} of {len(candidates)} candidates are quasi-generic at rho/2")
    return kept


def _landing_certificate(system: MapSystem, z: Point, m: int,
                         landing: Mapping[str, float]) -> Optional[PesinCertificate]:
    """Pesin certificate at f^m(z) when it lies in the level set ell <= ell0, else None."""
    try:
        landing_point = Point.of(iterate_array(system, z.array, m), system.space)
        cert = pesin_certificate(system, landing_point, int(landing["horizon"]), float(landing["chi"]))
    except VarhorseError:
        return None
    return cert if cert.in_pesin_set(float(landing["ell0"])) else None


def _next_return(system: MapSystem, rect: Rectangle, z: Point, after: int, m_max: int) -> Optional[int]:
    try:
        xy = iterate_array(system, z.array, after)
        for m in range(after + 1, m_max + 1):
            xy = iterate_array(system, xy, 1)
            if rect.in_core(rect.to_chart(xy)):
                return m
    except OrbitEscape:
        return None
    return None


def _repair(system, rect, cones, branch, accepted, family, reference, rho, s, m_max, repairs,
            exact, samples, diagnostics) -> Optional[HyperbolicBranch]:
    """
    Forward only: each round re-certifies the branch at the next return of
    its base point, so m grows and both cylinders narrow. Shortening m or
    moving the base point is never tried.
    """
    for _ in range(repairs + 1):
        if _separated(branch, accepted, exact):
            return branch
        m_next = _next_return(system, rect, branch.base_point, branch.m, m_max)
        if m_next is None:
            return None
        outcome = _attempt((system, rect, cones, branch.base_point, m_next, family, reference,
                            rho, s, samples))
        if isinstance(outcome, VarhorseError):
            return None
        diagnostics["repaired"] += 1
        branch = outcome
    return branch if _separated(branch, accepted, exact) else None
