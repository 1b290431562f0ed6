"""
Periodic-orbit measures on a horseshoe's saturate, the saturation time,
orbit block decompositions, the 2rho and 3rho checks and the multi-stage
convergence experiment.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models import (Block, CheckResult, ConvergenceReport, InsufficientItinerary, MeasureRow,
                    OrbitDecomposition, PeriodicOrbitMeasure, PreconditionError, ReferenceMeasure,
                    StageReport, SymbolicWord, TestFunctionFamily, VariableTimeHorseshoe, VarhorseError,
                    WeakStarNeighborhood)
from models.horseshoe_types import PERIODIC
from .dynsys import orbit_sums
from .horseshoe import lyndon_words, periodic_point, saturate_orbit

logger = logging.getLogger(__name__)

WORD_ENUMERATION_BITS = 16

ReturnTimes = Union[VariableTimeHorseshoe, Sequence]


def _return_times(h: ReturnTimes) -> Tuple[int, ...]:
    if isinstance(h, VariableTimeHorseshoe):
        return h.return_times
    return tuple(b if isinstance(b, int) else b.return_time for b in h)


def saturation_time(branches: ReturnTimes, family: TestFunctionFamily, rho: float, s: int) -> int:
    """T(rho, s) = ceil(max m_i * max_{i<=s} |phi_i|_inf / rho)."""
    if rho <= 0:
        raise PreconditionError("rho must be > 0")
    value = max(_return_times(branches)) * family.max_sup_norm(s) / rho
    # absorb the rounding of the division, e.g. 3 / 0.1
    return max(1, math.ceil(value * (1 - 1e-12)))


def decompose(h: ReturnTimes, itinerary: SymbolicWord, L: int) -> OrbitDecomposition:
    """
    Greedy split of [0, L) into whole return blocks followed by a remainder
    shorter than the next block. Periodic itineraries repeat; others must
    cover L.
    """
    if L < 1:
        raise PreconditionError("L must be >= 1")
    times = _return_times(h)
    itinerary.check_alphabet(len(times))
    counts = [0] * len(times)
    blocks: List[Block] = []
    pos = 0
    idx = 0
    while pos < L:
        if idx >= len(itinerary) and itinerary.kind != PERIODIC:
            raise InsufficientItinerary(f"itinerary of {len(itinerary)} letters ends before L = {L}")
        letter = itinerary.letters[idx % len(itinerary)]
        m = times[letter - 1]
        if pos + m > L:
            break
        blocks.append(Block(letter, pos, m))
        counts[letter - 1] += 1
        pos += m
        idx += 1
    return OrbitDecomposition(L, tuple(counts), pos, L - pos, tuple(blocks))


def split_sums(decomposition: OrbitDecomposition, values: Sequence[float]) -> Tuple[Dict[int, float], float]:
    """Per-symbol block sums and the remainder sum of one observable along the orbit."""
    if len(values) < decomposition.L:
        raise PreconditionError("fewer values than orbit steps")
    per_symbol: Dict[int, List[float]] = {}
    for block in decomposition.blocks:
        per_symbol.setdefault(block.symbol, []).extend(values[block.start:block.start + block.length])
    sums = {k: math.fsum(v) for k, v in per_symbol.items()}
    remainder = math.fsum(values[decomposition.L_prime:decomposition.L])
    return sums, remainder


def reconstruct_sum(decomposition: OrbitDecomposition, values: Sequence[float]) -> float:
    """Total Birkhoff sum rebuilt from the block split; exactly rounded."""
    terms: List[float] = []
    for block in decomposition.blocks:
        terms.extend(values[block.start:block.start + block.length])
    terms.extend(values[decomposition.L_prime:decomposition.L])
    return math.fsum(terms)


def _coding_radius(hs: VariableTimeHorseshoe, word: SymbolicWord) -> float:
    return max(periodic_point(hs, word.rotated(r))[1] for r in range(len(word)))


def _check_certified(hs: VariableTimeHorseshoe, rho: float, s: int) -> None:
    """Branches of ``hs`` must carry quasi-genericity certificates for this (rho, s)."""
    for branch in hs.branches:
        cert = branch.qg_certificate
        if not math.isclose(cert.rho, rho, rel_tol=1e-12) or cert.s != s:
            raise PreconditionError(f"horseshoe was certified at rho = {cert.rho}, s = {cert.s}, "
                                    f"not rho = {rho}, s = {s}")


def _slack(radius: float, family: TestFunctionFamily, s: int, reference: ReferenceMeasure) -> float:
    return radius * family.max_lipschitz(s) + reference.integral_error


def periodic_measure(hs: VariableTimeHorseshoe, word: SymbolicWord, family: TestFunctionFamily,
                     s: Optional[int] = None) -> PeriodicOrbitMeasure:
    """Equidistribution on the periodic f-orbit coded by ``word``."""
    if word.kind != PERIODIC:
        raise PreconditionError("periodic_measure needs a periodic word")
    s = s or family.count
    period = hs.period(word.letters)
    support = saturate_orbit(hs, word, period)
    sums = orbit_sums(np.array([p.array for p in support]), family, s)
    return PeriodicOrbitMeasure(hs, word, period, tuple(support), tuple(float(v) / period for v in sums),
                                _coding_radius(hs, word))


def birkhoff_residuals(hs: VariableTimeHorseshoe, word: SymbolicWord, lengths: Sequence[int],
                       family: TestFunctionFamily, reference: ReferenceMeasure, s: int) -> List[float]:
    """max_i |S_L phi_i / L - integral_i| along the saturate orbit, for each L."""
    points = saturate_orbit(hs, word, max(lengths))
    values = family.evaluate(np.array([p.array for p in points]), s)
    ref = np.array(reference.head(s))
    out = []
    for L in lengths:
        averages = np.array([math.fsum(values[:L, i]) for i in range(s)]) / L
        out.append(float(np.max(np.abs(averages - ref))))
    return out


def two_rho_profile(hs: VariableTimeHorseshoe, word: SymbolicWord, lengths: Sequence[int],
                    family: TestFunctionFamily, reference: ReferenceMeasure, rho: float,
                    s: int) -> List[CheckResult]:
    """check_two_rho over several horizons sharing one saturate orbit."""
    _check_certified(hs, rho, s)
    T = saturation_time(hs, family, rho, s)
    if min(lengths) < T:
        raise PreconditionError(f"L = {min(lengths)} is below the saturation time T = {T}")
    slack = _slack(_coding_radius(hs, word), family, s, reference)
    return [CheckResult(r < 2 * rho + slack, r, 2 * rho, slack)
            for r in birkhoff_residuals(hs, word, lengths, family, reference, s)]


def check_two_rho(hs: VariableTimeHorseshoe, word: SymbolicWord, L: int, family: TestFunctionFamily,
                  reference: ReferenceMeasure, rho: float, s: int) -> CheckResult:
    """Birkhoff averages over L >= T steps of the saturate orbit lie within 2rho."""
    if word.kind != PERIODIC:
        word = SymbolicWord(word.letters, PERIODIC)
    return two_rho_profile(hs, word, [L], family, reference, rho, s)[0]


def check_three_rho(hs: VariableTimeHorseshoe, candidate: PeriodicOrbitMeasure, reference: ReferenceMeasure,
                    rho: float, s: int, family: TestFunctionFamily) -> CheckResult:
    """The candidate measure lies in O(3rho, s) up to the coding slack."""
    _check_certified(hs, rho, s)
    distance = WeakStarNeighborhood(3 * rho, s, reference).distance(candidate.integrals)
    slack = _slack(candidate.error_radius, family, s, reference)
    return CheckResult(distance < 3 * rho + slack, float(distance), 3 * rho, slack)


def proximity_horizon(hs: VariableTimeHorseshoe, word: SymbolicWord, family: TestFunctionFamily,
                      rho: float, s: int) -> int:
    """L = max(T, 10 P) used to compare a periodic measure with its Birkhoff averages."""
    return max(saturation_time(hs, family, rho, s), 10 * hs.period(word.letters))


def three_rho_chain(hs: VariableTimeHorseshoe, word: SymbolicWord, family: TestFunctionFamily,
                    reference: ReferenceMeasure, rho: float, s: int) -> Tuple[CheckResult, float, CheckResult]:
    """
    (2rho check at the proximity horizon, distance between the measure and
    those averages, 3rho check of the measure).
    """
    measure = periodic_measure(hs, word, family, s)
    L = proximity_horizon(hs, word, family, rho, s)
    points = saturate_orbit(hs, word, L)
    averages = orbit_sums(np.array([p.array for p in points]), family, s) / L
    proximity = float(np.max(np.abs(averages - np.array(measure.integrals[:s]))))
    return (check_two_rho(hs, word, L, family, reference, rho, s), proximity,
            check_three_rho(hs, measure, reference, rho, s, family))


def word_length_cap(n_branches: int, max_word_len: int) -> int:
    """W with N^W <= 2^16, bounded by ``max_word_len``."""
    if n_branches < 2:
        return max_word_len
    return max(1, min(max_word_len, int(WORD_ENUMERATION_BITS / math.log2(n_branches))))


def measure_sweep(hs: VariableTimeHorseshoe, family: TestFunctionFamily, reference: ReferenceMeasure,
                  rho: float, s: int, max_word_len: int, threads: int = 1) -> List[Tuple[PeriodicOrbitMeasure, CheckResult]]:
    """Every primitive periodic word up to ``max_word_len``, one per cyclic class, in lexicographic order."""
    words = [SymbolicWord(w, PERIODIC) for w in lyndon_words(hs.n, max_word_len)]

    def run(word: SymbolicWord) -> Tuple[PeriodicOrbitMeasure, CheckResult]:
        measure = periodic_measure(hs, word, family, s)
        return measure, check_three_rho(hs, measure, reference, rho, s, family)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(executor.map(run, words))
    logger.info(f"Checked {len(results)} periodic measures up to word length {max_word_len}")
    return results


def sweep_rows(results: Sequence[Tuple[PeriodicOrbitMeasure, CheckResult]]) -> Tuple[MeasureRow, ...]:
    return tuple(MeasureRow(m.word.label(), m.period, c.value, c.slack, c.passed) for m, c in results)


StageBuilder = Callable[[int, float, int], Tuple[VariableTimeHorseshoe, object]]


def convergence_experiment(reference: ReferenceMeasure, family: TestFunctionFamily,
                           schedule: Sequence[Tuple[float, int]], budgets: Mapping[str, int],
                           build_stage: StageBuilder, threads: int = 1) -> ConvergenceReport:
    """
    Per stage n: build the horseshoe at (rho_n, s_n), enumerate periodic
    measures up to W(n) letters and record d_n, the largest distance to the
    reference. Stage failures are recorded and the experiment continues.
    """
    stages: List[StageReport] = []
    for index, (rho, s) in enumerate(schedule, start=1):
        try:
            hs, refinement = build_stage(index, rho, s)
            width = word_length_cap(hs.n, int(budgets.get("max_word_len", 6)))
            results = measure_sweep(hs, family, reference, rho, s, width, threads)
            rows = sweep_rows(results)
            worst = max(rows, key=lambda r: r.distance)
            slack = max(r.slack for r in rows)
            stage = StageReport(index, rho, s, hs.n, hs.return_times, width, worst.distance, slack,
                                all(r.passed for r in rows), rows, None, hs, refinement)
            logger.info(f"Stage {index}: rho={rho}, s={s}, N={hs.n}, d_n={worst.distance:.6e}")
        except VarhorseError as e:
            logger.warning(f"Stage {index} (rho={rho}, s={s}) failed: {e}")
            stage = StageReport(index, rho, s, 0, (), 0, math.nan, 0.0, False, (), f"{type(e).__name__}: {e}")
        stages.append(stage)
    return ConvergenceReport(tuple(stages))
