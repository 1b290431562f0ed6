import math
from fractions import Fraction

import numpy as np
import pytest

from models import (BudgetExhausted, InsufficientItinerary, PeriodicOrbitMeasure, PreconditionError,
                    SymbolicWord, TestFunctionFamily, fourier_family)
from models.horseshoe_types import FORWARD
from models.test_functions import constant_function
from utils import catalog, measures
from utils.horseshoe import lyndon_words

RHO, S = 0.1, 4
LYNDON_6 = list(lyndon_words(2, 6))


def _exact_fixed_point(word):
    """Fixed point of F_{a_k} o ... o F_{a_1} in chart coordinates."""
    su, bu, sv, bv = Fraction(1), Fraction(0), Fraction(1), Fraction(0)
    for a in word:
        alpha, beta = catalog.FIXTURE_RETURNS[a]
        su, bu = su / 4, alpha + bu / 4
        sv, bv = sv * 4, 4 * (bv + beta)
    return bu / (1 - su), bv / (1 - sv)


def _oracle_integrals(system, word, family):
    eps = catalog.fixture_scale(system)
    boxes = catalog.fixture_boxes(system)
    c, b1, b2, b3 = boxes["R"], boxes["B1"], boxes["B2"], boxes["B3"]
    u, v = _exact_fixed_point(word)
    points = []
    for a in word:
        w = np.array([float(u), float(v)])
        if a == 1:
            points += [c + eps * w, b1 + eps * w]
        else:
            points += [c + eps * w, b2 + eps * w, b3 + eps * w]
        alpha, beta = catalog.FIXTURE_RETURNS[a]
        u, v = alpha + u / 4, 4 * (v + beta)
    return family.evaluate(np.array(points), family.count).mean(axis=0)


def _random_word(rng, max_length=8):
    return tuple(int(a) for a in rng.integers(1, 3, size=int(rng.integers(1, max_length + 1))))


def test_saturation_time(fixture_horseshoe, family):
    assert measures.saturation_time(fixture_horseshoe, family, RHO, S) == 30
    assert measures.saturation_time([2, 3], family, RHO / 2, S) == 60
    doubled = TestFunctionFamily((constant_function(2.0),))
    assert measures.saturation_time([2, 3], doubled, RHO, 1) == 60
    with pytest.raises(PreconditionError):
        measures.saturation_time([2, 3], family, 0.0, S)


@pytest.mark.parametrize("L, counts, l_prime, remainder", [
    (10, (2, 2), 10, 0),
    (9, (2, 1), 7, 2),
    (1, (0, 0), 0, 1),
])


def test_decompose(L, counts, l_prime, remainder):
    decomposition = measures.decompose([2, 3], SymbolicWord((1, 2)), L)
    assert decomposition.block_counts == counts
    assert decomposition.L_prime == l_prime
    assert decomposition.remainder == remainder
    assert sum(b.length for b in decomposition.blocks) == l_prime


def test_decompose_finite_itinerary_runs_out():
    with pytest.raises(InsufficientItinerary):
        measures.decompose([2, 3], SymbolicWord((1, 2), FORWARD), 10)
    with pytest.raises(PreconditionError):
        measures.decompose([2, 3], SymbolicWord((3,)), 10)


def test_split_and_reconstruct_sums():
    decomposition = measures.decompose([2, 3], SymbolicWord((1, 2)), 9)
    values = [float(i) for i in range(10)]
    per_symbol, remainder = measures.split_sums(decomposition, values)
    assert per_symbol == {1: 12.0, 2: 9.0}
    assert remainder == 15.0
    assert measures.reconstruct_sum(decomposition, values) == sum(range(9))
    with pytest.raises(PreconditionError):
        measures.split_sums(decomposition, values[:5])


def test_decompose_random_itineraries():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        word = SymbolicWord(_random_word(rng))
        L = int(rng.integers(1, 300))
        decomposition = measures.decompose([2, 3], word, L)
        values = [float(v) for v in rng.integers(-50, 51, size=L)]
        assert 0 <= decomposition.remainder < 3
        assert decomposition.L_prime + decomposition.remainder == L
        assert sum(b.length for b in decomposition.blocks) == decomposition.L_prime
        assert sum(decomposition.block_counts) == len(decomposition.blocks)
        assert measures.reconstruct_sum(decomposition, values) == sum(values)
        per_symbol, remainder = measures.split_sums(decomposition, values)
        assert sum(per_symbol.values()) + remainder == sum(values)


def test_block_averages_stay_near_the_reference(fixture_horseshoe, family, fixture_reference):
    rng = np.random.default_rng(3)
    ref = np.array(fixture_reference.head(S))
    sup = family.max_sup_norm(S)
    for _ in range(20):
        word = SymbolicWord(_random_word(rng))
        L = int(rng.integers(30, 120))
        points = measures.saturate_orbit(fixture_horseshoe, word, L)
        values = family.evaluate(np.array([p.array for p in points]), S)
        decomposition = measures.decompose(fixture_horseshoe, word, L)
        for block in decomposition.blocks:
            block_mean = values[block.start:block.start + block.length].mean(axis=0)
            assert np.max(np.abs(block_mean - ref)) < 2 * RHO
        residual = np.abs(values[:L].sum(axis=0) - L * ref)
        assert np.all(residual <= 2 * RHO * decomposition.L_prime + 2 * sup * decomposition.remainder)


@pytest.mark.parametrize("word", LYNDON_6, ids=lambda w: "".join(map(str, w)))
def test_periodic_measure_matches_exact_orbit(fixture_system, fixture_horseshoe, family,
                                              fixture_reference, word):
    measure = measures.periodic_measure(fixture_horseshoe, SymbolicWord(word), family)
    assert measure.period == fixture_horseshoe.period(word)
    assert len(measure.support_orbit) == measure.period
    oracle = _oracle_integrals(fixture_system, word, family)
    assert measure.integrals == pytest.approx(tuple(oracle), abs=1e-9)
    assert measure.error_radius < 1e-9

    result = measures.check_three_rho(fixture_horseshoe, measure, fixture_reference, RHO, S, family)
    distance = float(np.max(np.abs(oracle[:S] - np.array(fixture_reference.head(S)))))
    assert result.value == pytest.approx(distance, abs=1e-9)
    assert result.passed == (distance < 3 * RHO + result.slack)


def test_lyndon_measures_cover_every_length():
    assert len(LYNDON_6) == 23
    assert [len(w) for w in LYNDON_6].count(6) == 9


@pytest.mark.slow
def test_all_period_words_average_to_the_reference(fixture_horseshoe, family, fixture_reference):
    weighted = np.zeros(family.count)
    total = 0
    for index in range(2 ** 8):
        word = tuple(1 + ((index >> j) & 1) for j in range(8))
        measure = measures.periodic_measure(fixture_horseshoe, SymbolicWord(word), family)
        weighted += measure.period * np.array(measure.integrals)
        total += measure.period
    assert total == 256 * 20
    assert weighted / total == pytest.approx(fixture_reference.integrals, abs=1e-6)


def test_constant_observable_integrates_to_its_value(fixture_horseshoe):
    constant = TestFunctionFamily((constant_function(0.7),))
    for word in [(1,), (1, 2, 2)]:
        measure = measures.periodic_measure(fixture_horseshoe, SymbolicWord(word), constant)
        assert measure.integrals == pytest.approx((0.7,), abs=1e-15)


def test_periodic_measure_is_rotation_invariant(fixture_horseshoe, family):
    a = measures.periodic_measure(fixture_horseshoe, SymbolicWord((1, 2)), family)
    b = measures.periodic_measure(fixture_horseshoe, SymbolicWord((2, 1)), family)
    assert np.allclose(a.integrals, b.integrals, atol=1e-12)
    with pytest.raises(PreconditionError):
        measures.periodic_measure(fixture_horseshoe, SymbolicWord((1, 2), FORWARD), family)


def test_check_two_rho(fixture_horseshoe, family, fixture_reference):
    word = SymbolicWord((1, 2))
    result = measures.check_two_rho(fixture_horseshoe, word, 30, family, fixture_reference, RHO, S)
    assert result.passed
    assert result.threshold == pytest.approx(2 * RHO)
    profile = measures.two_rho_profile(fixture_horseshoe, word, [30, 60, 90], family, fixture_reference, RHO, S)
    assert all(profile)
    with pytest.raises(PreconditionError):
        measures.check_two_rho(fixture_horseshoe, word, 29, family, fixture_reference, RHO, S)


@pytest.mark.slow
def test_two_rho_holds_past_the_saturation_time(fixture_horseshoe, family, fixture_reference):
    T = measures.saturation_time(fixture_horseshoe, family, RHO, S)
    rng = np.random.default_rng(7)
    for _ in range(100):
        word = SymbolicWord(_random_word(rng))
        profile = measures.two_rho_profile(fixture_horseshoe, word, range(T, T + 51), family,
                                           fixture_reference, RHO, S)
        assert all(r.passed for r in profile)


def test_checks_refuse_a_foreign_tolerance(fixture_horseshoe, family, fixture_reference):
    word = SymbolicWord((1, 2))
    with pytest.raises(PreconditionError, match="certified"):
        measures.check_two_rho(fixture_horseshoe, word, 60, family, fixture_reference, RHO / 2, S)
    with pytest.raises(PreconditionError, match="certified"):
        measures.two_rho_profile(fixture_horseshoe, word, [30], family, fixture_reference, RHO, S - 1)
    measure = measures.periodic_measure(fixture_horseshoe, word, family)
    with pytest.raises(PreconditionError, match="certified"):
        measures.check_three_rho(fixture_horseshoe, measure, fixture_reference, RHO / 2, S, family)
    assert math.isclose(fixture_horseshoe.branches[0].qg_certificate.rho, RHO)


def test_check_three_rho(fixture_horseshoe, family, fixture_reference):
    measure = measures.periodic_measure(fixture_horseshoe, SymbolicWord((1, 2)), family)
    exact = PeriodicOrbitMeasure(fixture_horseshoe, measure.word, measure.period, measure.support_orbit,
                                 fixture_reference.integrals, 0.0)
    result = measures.check_three_rho(fixture_horseshoe, exact, fixture_reference, RHO, S, family)
    assert result.passed
    assert result.value == 0.0

    inflated = list(measure.integrals)
    inflated[2] += 4 * RHO
    far = PeriodicOrbitMeasure(fixture_horseshoe, measure.word, measure.period, measure.support_orbit,
                               tuple(inflated), measure.error_radius)
    result = measures.check_three_rho(fixture_horseshoe, far, fixture_reference, RHO, S, family)
    assert not result.passed
    assert result.value > 3 * RHO


def test_three_rho_chain(fixture_horseshoe, family, fixture_reference):
    word = SymbolicWord((1, 1, 2))
    assert measures.proximity_horizon(fixture_horseshoe, word, family, RHO, S) == 70
    two_rho, proximity, three_rho = measures.three_rho_chain(fixture_horseshoe, word, family,
                                                            fixture_reference, RHO, S)
    assert two_rho.passed and three_rho.passed
    # 70 steps are exactly ten periods
    assert proximity < 1e-12


def test_word_length_cap():
    assert measures.word_length_cap(2, 6) == 6
    assert measures.word_length_cap(2, 20) == 16
    assert measures.word_length_cap(4, 20) == 8
    assert measures.word_length_cap(1, 5) == 5
    assert measures.word_length_cap(300, 6) == 1


def test_measure_sweep(fixture_horseshoe, family, fixture_reference):
    results = measures.measure_sweep(fixture_horseshoe, family, fixture_reference, RHO, S, 3)
    rows = measures.sweep_rows(results)
    assert [r.word for r in rows] == ["1", "112", "12", "122", "2"]
    assert all(r.passed for r in rows)

    threaded = measures.sweep_rows(measures.measure_sweep(fixture_horseshoe, family, fixture_reference,
                                                          RHO, S, 6, threads=4))
    assert len(threaded) == 23
    assert all(r.passed for r in threaded)


def test_convergence_experiment_single_stage(fixture_horseshoe, family, fixture_reference):
    def build_stage(index, rho, s):
        return fixture_horseshoe, None

    report = measures.convergence_experiment(fixture_reference, family, [(RHO, S)], {"max_word_len": 4},
                                             build_stage)
    assert report.passed
    (stage,) = report.stages
    assert stage.max_word_len == 4
    assert len(stage.measures) == 8
    assert stage.distance == max(r.distance for r in stage.measures)
    assert stage.to_dict()["threshold"] == pytest.approx(3 * RHO + stage.slack)


def test_convergence_experiment_records_failed_stages(fixture_horseshoe, family, fixture_reference):
    def build_stage(index, rho, s):
        if index == 2:
            raise BudgetExhausted("no branches", {"candidates": 0})
        return fixture_horseshoe, None

    report = measures.convergence_experiment(fixture_reference, family, [(RHO, S), (RHO / 2, S)], {},
                                             build_stage)
    assert not report.passed
    assert report.stages[0].passed
    assert report.stages[1].error.startswith("BudgetExhausted")
    assert np.isnan(report.distances[1])


def test_convergence_experiment_empty_schedule(fixture_reference):
    report = measures.convergence_experiment(fixture_reference, fourier_family(1), [], {}, lambda *a: None)
    assert report.stages == ()
    assert report.passed
    assert report.table() == []
