from fractions import Fraction

import numpy as np
import pytest

from models import PreconditionError, TestFunction, TestFunctionFamily, fourier_family
from models.test_functions import constant_function
from utils import catalog


def test_build_map_registry():
    assert catalog.build_map("cat").name == "cat"
    assert catalog.build_map("standard", {"K": 2.0}).parameters == {"K": 2.0}
    assert catalog.build_map("affine_fixture", {"scale_exponent": 11}).parameters["scale_exponent"] == 11
    with pytest.raises(PreconditionError):
        catalog.build_map("henon")


def test_perturbed_cat_bounds_and_inverse():
    with pytest.raises(PreconditionError):
        catalog.perturbed_cat_map(0.2)
    system = catalog.perturbed_cat_map(0.05)
    xy = np.array([0.37, 0.81])
    np.testing.assert_allclose(system.step_back(system.step(xy)), xy, atol=1e-12)


def test_standard_map_inverse():
    system = catalog.standard_map(6.0)
    xy = np.array([0.12, 0.93])
    np.testing.assert_allclose(system.step_back(system.step(xy)), xy, atol=1e-12)
    assert np.linalg.det(system.jacobian(xy)) == pytest.approx(1.0)


def test_fixture_branch_pieces(fixture_system, fixture_rect):
    eps = catalog.fixture_scale(fixture_system)
    assert eps == 2.0 ** -9
    z1 = fixture_rect.from_chart((0.125, -0.5))
    landing = fixture_system.step(fixture_system.step(z1))
    np.testing.assert_allclose(fixture_rect.to_chart(landing), (-0.5 + 0.125 / 4, 0.0), atol=1e-12)
    z2 = fixture_rect.from_chart((-0.125, 0.5))
    landing = z2
    for _ in range(3):
        landing = fixture_system.step(landing)
    np.testing.assert_allclose(fixture_rect.to_chart(landing), (0.5 - 0.125 / 4, 0.0), atol=1e-12)
    np.testing.assert_allclose(fixture_system.jacobian(fixture_system.step(z1)), np.diag([0.25, 4.0]))
    np.testing.assert_allclose(fixture_system.jacobian(z1), np.eye(2))


def test_fixture_inverse_undoes_forward(fixture_system, fixture_rect):
    for uv in [(0.3, -0.6), (-0.9, 0.7), (0.0, 0.3)]:
        xy = fixture_rect.from_chart(uv)
        np.testing.assert_allclose(fixture_system.step_back(fixture_system.step(xy)), xy, atol=1e-15)


def test_fixture_outside_pieces_is_nan(fixture_system, fixture_rect):
    assert np.all(np.isnan(fixture_system.step(fixture_rect.from_chart((0.0, 0.0)))))
    with pytest.raises(PreconditionError):
        catalog.affine_fixture(3)


def test_fixture_seeds_lie_in_core(fixture_system, fixture_rect):
    for seed in catalog.fixture_seeds(fixture_system):
        assert fixture_rect.in_core(fixture_rect.to_chart(seed.array))


def test_fixture_stage_rectangles(fixture_system, fixture_rect):
    assert fixture_rect.h == 1.0
    assert fixture_rect.center.coordinates == catalog.FIXTURE_CENTER
    for stage in (2, 3, 4):
        rect = catalog.fixture_rectangle(fixture_system, stage)
        assert rect.h == 2.0 ** -(stage - 1)
        assert rect.scale == fixture_rect.scale
        np.testing.assert_allclose(fixture_rect.to_chart(rect.center.array), (0.4, -0.4), atol=1e-12)
    with pytest.raises(PreconditionError):
        catalog.fixture_rectangle(fixture_system, 0)


def test_fixture_cycle_points():
    assert catalog.fixture_cycle_point((1,)) == (Fraction(-2, 3), Fraction(-2, 3))
    assert catalog.fixture_cycle_point((2,)) == (Fraction(2, 3), Fraction(2, 3))
    assert catalog.fixture_cycle_point((1, 2)) == catalog.FIXTURE_BALANCED
    assert catalog.fixture_cycle_point((2, 1)) == (Fraction(-2, 5), Fraction(2, 5))


def test_fixture_periodic_seeds(fixture_system, fixture_rect):
    rect = catalog.fixture_rectangle(fixture_system, 2)
    seeds = catalog.fixture_periodic_seeds(fixture_system, rect, 6)
    assert len({p.coordinates for p in seeds}) == len(seeds)
    assert all(rect.in_core(rect.to_chart(p.array)) for p in seeds)
    np.testing.assert_allclose(fixture_rect.to_chart(seeds[0].array), (0.4, -0.4), atol=1e-12)
    back = seeds[0].array
    for _ in range(5):
        back = fixture_system.step(back)
    np.testing.assert_allclose(back, seeds[0].array, atol=1e-14)
    assert catalog.fixture_periodic_seeds(fixture_system, rect, 8)[:len(seeds)] == seeds


def test_lebesgue_reference(family):
    lebesgue = catalog.lebesgue_reference(family)
    assert lebesgue.integrals == (0.0, 0.0, 0.0, 0.0)
    assert lebesgue.provenance == "analytic"


def test_fixture_reference_weights_the_boxes(fixture_system, family, fixture_reference):
    boxes = catalog.fixture_boxes(fixture_system)
    box_average = [(2 * f(boxes["R"]) + f(boxes["B1"]) + f(boxes["B2"]) + f(boxes["B3"])) / 5
                   for f in family.functions]
    assert fixture_reference.integrals == pytest.approx(box_average, abs=5e-3)
    assert fixture_reference.integral_error == 0.0
    assert fixture_reference.provenance == "fixture"
    assert catalog.build_reference(fixture_system, family, {"provenance": "fixture"}) == fixture_reference


def test_fixture_reference_preconditions(fixture_system, family):
    constant = TestFunctionFamily((constant_function(0.7),))
    assert catalog.fixture_reference(fixture_system, constant).integrals == (0.7,)
    with pytest.raises(PreconditionError):
        catalog.fixture_reference(catalog.cat_map(), family)
    ramp = TestFunctionFamily((TestFunction(lambda xy: xy[0], 1.0, 1.0, "x"),))
    with pytest.raises(PreconditionError):
        catalog.fixture_reference(fixture_system, ramp)


def test_estimated_reference_is_close_to_lebesgue():
    family = fourier_family(modes=[[1, 0], [0, 1]])
    ref = catalog.estimate_reference(catalog.cat_map(), family, 20000, seed=5)
    assert ref.provenance == "long-orbit"
    assert ref.length == 20000
    assert ref.integral_error > 0
    assert max(abs(v) for v in ref.integrals) < 0.05
    with pytest.raises(PreconditionError):
        catalog.estimate_reference(catalog.cat_map(), family, 10, seed=5)
