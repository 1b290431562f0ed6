"""
Variable-time horseshoes: assembly from branches, nested cylinder
refinement, symbolic coding and f-orbits on the saturate.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from models import (CapExceeded, CrossingIncomplete, Cylinder, CylinderRefinement, HyperbolicBranch,
                    MapSystem, Point, PreconditionError, SymbolicWord, VariableTimeHorseshoe)
from models.horseshoe_types import BACKWARD, FORWARD, PERIODIC, Word
from .chart_return import RESOLUTION, ChartReturn, pull_stable, push_unstable
from .dynsys import iterate_array

logger = logging.getLogger(__name__)

REFINE_CAP = 2 ** 20
CROSS_TOL = 1e-7
# chart widths below this are at the floating-point floor of the chart
WIDTH_FLOOR = 1e-15


def build(system: MapSystem, branches: Sequence[HyperbolicBranch], rectangle=None) -> VariableTimeHorseshoe:
    """Assemble the horseshoe and verify disjointness and full Markov crossing."""
    if not branches:
        raise PreconditionError("a horseshoe needs at least one branch")
    rect = rectangle if rectangle is not None else branches[0].rectangle
    for b in branches:
        if b.rectangle is not rect:
            raise PreconditionError("all branches must live in the same rectangle")
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            if branches[i].source.separation(branches[j].source) <= 0:
                raise PreconditionError(f"sources {i + 1} and {j + 1} overlap")
            if branches[i].target.separation(branches[j].target) <= 0:
                raise PreconditionError(f"targets {i + 1} and {j + 1} overlap")
    matrix = []
    for i, b_i in enumerate(branches):
        row = []
        for j, b_j in enumerate(branches):
            crosses = b_i.source.crosses_fully(CROSS_TOL) and b_j.target.crosses_fully(CROSS_TOL)
            if not crosses:
                raise CrossingIncomplete(i + 1, j + 1)
            row.append(True)
        matrix.append(tuple(row))
    contraction = max(b.cone_certificate.contraction for b in branches)
    degenerate = len(branches) == 1
    if degenerate:
        logger.warning("Single-branch horseshoe: the coded set is one fixed point of F")
    return VariableTimeHorseshoe(tuple(branches), rect, tuple(matrix), contraction, system, degenerate)


class _Coder:
    """Chart returns of every branch, anchored at their base and landing points."""

    def __init__(self, hs: VariableTimeHorseshoe, resolution: int = RESOLUTION):
        self.hs = hs
        self.resolution = resolution
        rect = hs.rectangle
        self.bases = [rect.to_chart(b.base_point.array) for b in hs.branches]
        self.landings = [rect.to_chart(iterate_array(hs.system, b.base_point.array, b.m))
                         for b in hs.branches]
        self.returns = [ChartReturn.around(hs.system, rect, b.m, base)
                        for b, base in zip(hs.branches, self.bases)]

    def pull(self, letter: int, stable: Cylinder) -> Cylinder:
        """S_{a w} from S_w."""
        return pull_stable(self.returns[letter - 1], stable, self.bases[letter - 1], self.resolution).cylinder

    def push(self, letter: int, unstable: Cylinder) -> Cylinder:
        """U_{b w} from U_w."""
        return push_unstable(self.returns[letter - 1], unstable, self.landings[letter - 1],
                             self.resolution).cylinder

    def stable_of(self, future: Word) -> Cylinder:
        cyl = self.hs.branch(future[-1]).source
        for a in reversed(future[:-1]):
            cyl = self.pull(a, cyl)
        return cyl

    def unstable_of(self, past: Word) -> Cylinder:
        cyl = self.hs.branch(past[-1]).target
        for b in reversed(past[:-1]):
            cyl = self.push(b, cyl)
        return cyl


def _check_cap(n_branches: int, depth: int, cap: int) -> None:
    requested = n_branches ** depth
    if requested > cap:
        raise CapExceeded(requested, cap)


def refine(hs: VariableTimeHorseshoe, n: int, cap: int = REFINE_CAP, threads: int = 1) -> CylinderRefinement:
    """
    Depth-n cylinders S_w, U_w for all words of length n, built level by
    level: S_{a w'} is the pullback of S_{w'} through branch a and U_{b w'} the
    push of U_{w'} through branch b.
    """
    if n < 1:
        raise PreconditionError("refinement depth must be >= 1")
    _check_cap(hs.n, n, cap)
    coder = _Coder(hs)
    letters = range(1, hs.n + 1)
    stable: Dict[Word, Cylinder] = {(a,): hs.branch(a).source for a in letters}
    unstable: Dict[Word, Cylinder] = {(a,): hs.branch(a).target for a in letters}
    widths = [_widths(stable, unstable)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        for depth in range(2, n + 1):
            words = [(a,) + w for a in letters for w in sorted(stable)]
            new_s = list(executor.map(lambda w: coder.pull(w[0], stable[w[1:]]), words))
            new_u = list(executor.map(lambda w: coder.push(w[0], unstable[w[1:]]), words))
            next_s = dict(zip(words, new_s))
            next_u = dict(zip(words, new_u))
            _check_nesting(stable, next_s)
            _check_nesting(unstable, next_u)
            stable, unstable = next_s, next_u
            widths.append(_widths(stable, unstable))
            logger.debug(f"Refinement depth {depth}: {len(stable)} cylinders per kind, widths {widths[-1]}")
    logger.info(f"Refined {hs.n}-branch horseshoe to depth {n}")
    return CylinderRefinement(n, stable, unstable, widths[-1], tuple(widths))


def _widths(stable: Dict[Word, Cylinder], unstable: Dict[Word, Cylinder]) -> Tuple[float, float]:
    """(largest stable-direction width of U_w, largest unstable-direction width of S_w)."""
    return (max(c.width() for c in unstable.values()), max(c.width() for c in stable.values()))


def _check_nesting(parents: Dict[Word, Cylinder], children: Dict[Word, Cylinder]) -> None:
    for word, child in children.items():
        parent = parents[word[:-1]]
        if not parent.contains_cylinder(child, CROSS_TOL):
            raise PreconditionError(f"cylinder {word} is not nested in its parent")


def max_coding_depth(hs: VariableTimeHorseshoe, cap: int = REFINE_CAP) -> int:
    """Longest word whose full enumeration N^depth stays within ``cap``."""
    if hs.n == 1:
        return 64
    return max(1, int(math.floor(math.log(cap) / math.log(hs.n) + 1e-9)))


def effective_depth(hs: VariableTimeHorseshoe, requested: int) -> int:
    """Depth beyond which cylinder widths fall under the chart's float resolution."""
    lam = hs.contraction
    if not 0 < lam < 1:
        return requested
    floor_depth = int(math.ceil(math.log(WIDTH_FLOOR) / math.log(lam))) + 1
    return max(1, min(requested, floor_depth))


def _midline_intersection(stable: Cylinder, unstable: Cylinder) -> np.ndarray:
    """Fixed point of u -> tau(sigma(u)) for the two midlines."""
    u = 0.0
    for _ in range(200):
        v = float(stable.midline(u))
        u_next = float(unstable.midline(v))
        if abs(u_next - u) <= 1e-17:
            u = u_next
            break
        u = u_next
    return np.array([u, float(stable.midline(u))])


def point_from_word(hs: VariableTimeHorseshoe, past: SymbolicWord, future: SymbolicWord,
                    cap: int = REFINE_CAP) -> Tuple[Point, float]:
    """
    Center of S_future ∩ U_past with error radius scale * (stable width + unstable width).
    ``past`` lists the most recent letter first.
    """
    for word in (past, future):
        word.check_alphabet(hs.n)
    _check_cap(hs.n, max(len(past), len(future)), cap)
    coder = _Coder(hs)
    f_depth = effective_depth(hs, len(future))
    p_depth = effective_depth(hs, len(past))
    stable = coder.stable_of(future.letters[:f_depth])
    unstable = coder.unstable_of(past.letters[:p_depth])
    uv = _midline_intersection(stable, unstable)
    rect = hs.rectangle
    radius = rect.scale * (stable.width() + unstable.width())
    return Point.of(rect.from_chart(uv), hs.system.space), float(radius)


def periodic_point(hs: VariableTimeHorseshoe, word: SymbolicWord, depth: Optional[int] = None,
                   cap: int = REFINE_CAP) -> Tuple[Point, float]:
    """Coded point of the periodic itinerary ...www.www..."""
    k = len(word)
    depth = depth or effective_depth(hs, max_coding_depth(hs, cap))
    future = SymbolicWord(word.repeated(depth), FORWARD)
    reversed_word = tuple(reversed(word.letters))
    past = SymbolicWord(tuple(reversed_word[i % k] for i in range(depth)), BACKWARD)
    return point_from_word(hs, past, future, cap)


def saturate_orbit(hs: VariableTimeHorseshoe, itinerary: SymbolicWord, L: int,
                   depth: Optional[int] = None) -> List[Point]:
    """
    L consecutive f-iterates along the periodic itinerary; each symbol a
    contributes m_a steps taken from the coded point of the shifted word.
    """
    if itinerary.kind != PERIODIC:
        raise PreconditionError("saturate_orbit needs a periodic itinerary")
    if L < 1:
        raise PreconditionError("L must be >= 1")
    itinerary.check_alphabet(hs.n)
    anchors: Dict[int, Point] = {}
    points: List[Point] = []
    shift = 0
    while len(points) < L:
        r = shift % len(itinerary)
        if r not in anchors:
            anchors[r] = periodic_point(hs, itinerary.rotated(r), depth)[0]
        m = hs.branch(itinerary.letters[r]).m
        xy = anchors[r].array
        for j in range(min(m, L - len(points))):
            if j:
                xy = iterate_array(hs.system, xy, 1)
            points.append(Point.of(xy, hs.system.space))
        shift += 1
    return points


def forward_itinerary(hs: VariableTimeHorseshoe, uv, n: int) -> Word:
    """Letters of the branch sources visited by uv under F, at most n, stopping on exit."""
    coder = _Coder(hs)
    letters: List[int] = []
    cur = np.asarray(uv, dtype=float)
    for _ in range(n):
        hit = [a for a in range(1, hs.n + 1) if hs.branch(a).source.contains(cur, CROSS_TOL)]
        if not hit:
            break
        a = hit[0]
        letters.append(a)
        cur = coder.returns[a - 1](cur)
    return tuple(letters)


def locate(refinement: CylinderRefinement, uv) -> Optional[Word]:
    """Word of the depth-n stable cylinder containing uv."""
    for word in sorted(refinement.stable_cylinders):
        if refinement.stable_cylinders[word].contains(uv, CROSS_TOL):
            return word
    return None


def lyndon_words(n_letters: int, max_len: int) -> Iterator[Tuple[int, ...]]:
    """Lyndon words over 1..n_letters of length <= max_len in lexicographic order (Duval)."""
    if n_letters < 1 or max_len < 1:
        return
    w = [0]
    while w:
        yield tuple(a + 1 for a in w)
        k = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - k])
        while w and w[-1] == n_letters - 1:
            w.pop()
        if w:
            w[-1] += 1
