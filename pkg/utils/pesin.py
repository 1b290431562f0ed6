"""
Finite-horizon Pesin certificates, regular rectangles and cone checks.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from models import (ConeCertificate, ConeField, Cylinder, MapSystem, NoFiniteCertificate,
                    PesinCertificate, PhaseSpace, Point, PreconditionError, Rectangle)
from .dynsys import backward_orbit, cocycle_matrix, oseledec_splitting_estimate, orbit, toral_power_in_frame

logger = logging.getLogger(__name__)

ELL_RESOLUTION = 1e-3
ELL_CAP = 1e6
CHART_RADIUS = 0.25
SCALE_SAFETY = 0.5


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _log_stretches(jacobians: List[np.ndarray], start: np.ndarray) -> List[float]:
    """log |J_j v_j| for the normalised images v_j of ``start`` along the sequence."""
    v = _unit(np.asarray(start, dtype=float))
    logs = []
    for jac in jacobians:
        w = jac @ v
        norm = float(np.linalg.norm(w))
        logs.append(math.log(norm))
        v = w / norm
    return logs


def _directions_along(jacobians: List[np.ndarray], count: int) -> List[np.ndarray]:
    """
    Dominant directions at the last ``count`` base points of a chain of
    one-step matrices, obtained by pushing a generic vector through all of them.
    """
    v = _unit(np.array([0.6, 0.8]))
    dirs = []
    total = len(jacobians)
    for j, jac in enumerate(jacobians):
        v = _unit(jac @ v)
        if total - j - 1 < count:
            dirs.append(v)
    return dirs


def _required_log_ell(system: MapSystem, x: Point, n: int, chi: float) -> float:
    """log of the smallest ell satisfying the four rate inequalities over 0..n."""
    fwd = orbit(system, x.array, 2 * n + 1)
    past = backward_orbit(system, x.array, 2 * n)
    jac_f = [np.asarray(system.jacobian(p), dtype=float) for p in fwd]
    # Df^{-1} at f^{-j}x is the inverse of Df at f^{-j-1}x
    jac_b = [np.linalg.inv(np.asarray(system.jacobian(past[j + 1]), dtype=float)) for j in range(2 * n)]

    # stable direction at x..f^n x: pulled back from f^{2n}x
    back_chain = [np.linalg.inv(jac_f[j]) for j in range(2 * n - 1, -1, -1)]
    e_s_forward = list(reversed(_directions_along(back_chain, n + 1)))
    # unstable direction at x..f^{-n}x: pushed from f^{-2n}x
    push_chain = [np.asarray(system.jacobian(past[j]), dtype=float) for j in range(2 * n, 0, -1)]
    e_u_backward = list(reversed(_directions_along(push_chain, n + 1)))

    stable_contract = [math.log(np.linalg.norm(jac_f[j] @ e_s_forward[j])) for j in range(n)]
    unstable_contract = [math.log(np.linalg.norm(jac_b[j] @ e_u_backward[j])) for j in range(n)]
    unstable_expand = _log_stretches(jac_f[:n], e_u_backward[0])
    stable_expand = _log_stretches(jac_b[:n], e_s_forward[0])

    worst = 0.0
    acc = [0.0, 0.0, 0.0, 0.0]
    for k in range(1, n + 1):
        acc[0] += stable_contract[k - 1]
        acc[1] += unstable_contract[k - 1]
        acc[2] += unstable_expand[k - 1]
        acc[3] += stable_expand[k - 1]
        worst = max(worst, acc[0] + k * chi, acc[1] + k * chi,
                    k * chi - acc[2], k * chi - acc[3])
    return worst


def pesin_certificate(system: MapSystem, x: Point, n: int, chi: float) -> PesinCertificate:
    """
    Minimal ell >= 1, at resolution 1e-3, with |Df^k e_s|, |Df^-k e_u| <= ell e^{-k chi},
    |Df^k e_u|, |Df^-k e_s| >= ell^-1 e^{k chi} for 0 <= k <= n and angle >= 1/ell.
    """
    if chi <= 0:
        raise PreconditionError("chi must be > 0")
    if n < 1:
        raise PreconditionError("horizon must be >= 1")
    splitting = oseledec_splitting_estimate(system, x, n, n)
    log_ell = max(_required_log_ell(system, x, n, chi), -math.log(splitting.angle))
    if log_ell > math.log(ELL_CAP):
        raise NoFiniteCertificate(math.exp(min(log_ell, 700.0)))
    raw = math.exp(log_ell)
    ell = max(1.0, math.ceil(raw / ELL_RESOLUTION - 1e-6) * ELL_RESOLUTION)
    logger.debug(f"Pesin certificate at {x.coordinates}: n={n}, chi={chi}, ell={ell:.3f}")
    return PesinCertificate(x, n, chi, ell, (splitting.e_s, splitting.e_u), splitting.angle)


def build_rectangle(cert: PesinCertificate, h: float, space: PhaseSpace,
                    chart_radius: float = CHART_RADIUS) -> Rectangle:
    """Chart box around the certified point, framed by its splitting."""
    if not 0 < h <= 1:
        raise PreconditionError(f"half-width h = {h} outside (0, 1]")
    basis = np.column_stack(cert.splitting)
    gram_inv = np.linalg.inv(basis.T @ basis)
    scale = min(chart_radius, 1.0 / (4.0 * np.linalg.norm(gram_inv, 2))) * SCALE_SAFETY
    return Rectangle(Point.of(cert.base_point.array, space), h, cert.splitting, float(scale),
                     space, min_angle=1.0 / cert.ell)


def chart_derivative(system: MapSystem, rect: Rectangle, xy, m: int) -> np.ndarray:
    """Df^m expressed in the chart frame: B^-1 Df^m B."""
    basis = rect.basis
    if system.linear_toral:
        return toral_power_in_frame(system.toral_matrix, basis, m)
    return np.linalg.solve(basis, cocycle_matrix(system, xy, m) @ basis)


def _slope(w: np.ndarray, axial: int) -> float:
    a = abs(float(w[axial]))
    return math.inf if a == 0.0 else abs(float(w[1 - axial])) / a


def cone_preserved(system: MapSystem, branch_domain: Cylinder, m: int, cones: ConeField,
                   samples: int = 33) -> ConeCertificate:
    """
    Grid check that Df^m maps the unstable cone strictly inside itself and
    Df^-m does the same for the stable cone, with the worst angular slack.
    """
    if m < 1 or samples < 2:
        raise PreconditionError("m >= 1 and samples >= 2 are required")
    rect = branch_domain.rectangle
    gamma = cones.gamma
    limit = math.atan(gamma)
    margin = math.inf
    image_width = 0.0
    contraction = 0.0
    witness: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None
    for uv in branch_domain.grid(samples):
        xy = rect.from_chart(uv)
        d = chart_derivative(system, rect, xy, m)
        d_inv = np.linalg.inv(d)
        for v in cones.unstable_extremes():
            w = d @ v
            slope = _slope(w, 1)
            image_width = max(image_width, slope)
            contraction = max(contraction, 1.0 / abs(w[1]) if w[1] != 0 else math.inf)
            slack = limit - math.atan(slope)
            if slack < margin:
                margin = slack
                witness = ((float(uv[0]), float(uv[1])), (float(v[0]), float(v[1])))
        for v in cones.stable_extremes():
            w = d_inv @ v
            slope = _slope(w, 0)
            image_width = max(image_width, slope)
            contraction = max(contraction, 1.0 / abs(w[0]) if w[0] != 0 else math.inf)
            slack = limit - math.atan(slope)
            if slack < margin:
                margin = slack
                witness = ((float(uv[0]), float(uv[1])), (float(v[0]), float(v[1])))
    passed = margin > 0
    if not passed:
        logger.debug(f"Cone check failed with margin {margin:.3e} at {witness}")
    return ConeCertificate(passed, float(margin), float(image_width), float(contraction),
                           samples, None if passed else witness)
