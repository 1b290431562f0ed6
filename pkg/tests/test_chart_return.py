import math

import numpy as np
import pytest

from models import ChartDegenerate, Point
from models.pesin_types import EXACT_AFFINE, SAMPLED, STABLE, UNSTABLE
from utils import catalog, pesin
from utils.branches import delta_modulus
from utils.chart_return import (RESOLUTION, ChartReturn, full_cylinder, graph_tolerance, pull_stable,
                                push_unstable)

LAMBDA = (3 + math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def cat_rect(cat_system):
    cert = pesin.pesin_certificate(cat_system, Point((0.0, 0.0)), 20, 0.5)
    return pesin.build_rectangle(cert, 1.0, catalog.TORUS_SPACE)


def test_affine_return_fitted_at_anchor(fixture_system, fixture_rect):
    ret = ChartReturn.around(fixture_system, fixture_rect, 2, (0.125, -0.5))
    assert ret.is_affine
    np.testing.assert_allclose(ret.linear, np.diag([0.25, 4.0]), atol=1e-12)
    np.testing.assert_allclose(ret.offset, [-0.5, 2.0], atol=1e-9)
    np.testing.assert_allclose(ret((0.2, -0.4)), [-0.45, 0.4], atol=1e-9)
    np.testing.assert_allclose(ret.inverse(ret((0.2, -0.4))), [0.2, -0.4], atol=1e-12)


def test_fixture_branch_cylinders_are_exact(fixture_system, fixture_rect):
    ret = ChartReturn.around(fixture_system, fixture_rect, 2, (0.125, -0.5))
    source = pull_stable(ret, full_cylinder(fixture_rect, STABLE), (0.125, -0.5))
    target = push_unstable(ret, full_cylinder(fixture_rect, UNSTABLE), (-0.46875, 0.0))
    assert source.cylinder.representation == EXACT_AFFINE
    assert source.cylinder.lower == pytest.approx((-0.75, -0.75), abs=1e-9)
    assert source.cylinder.upper == pytest.approx((-0.25, -0.25), abs=1e-9)
    assert target.cylinder.lower == pytest.approx((-0.75, -0.75), abs=1e-9)
    assert target.cylinder.upper == pytest.approx((-0.25, -0.25), abs=1e-9)
    assert source.crosses(1e-7) and target.crosses(1e-7)


def test_cat_map_transfer_is_sampled(cat_system, cat_rect):
    ret = ChartReturn(cat_system, cat_rect, 1)
    assert not ret.is_affine
    source = pull_stable(ret, full_cylinder(cat_rect, STABLE), (0.0, 0.0)).cylinder
    assert source.representation == SAMPLED
    assert source.resolution == RESOLUTION
    np.testing.assert_allclose(source.lo, -1 / LAMBDA, atol=1e-9)
    np.testing.assert_allclose(source.hi, 1 / LAMBDA, atol=1e-9)

    target = push_unstable(ret, full_cylinder(cat_rect, UNSTABLE), (0.0, 0.0)).cylinder
    np.testing.assert_allclose(target.lo, -1 / LAMBDA, atol=1e-9)
    np.testing.assert_allclose(target.hi, 1 / LAMBDA, atol=1e-9)


def test_cat_map_return_roundtrip(cat_system, cat_rect):
    ret = ChartReturn(cat_system, cat_rect, 3)
    uv = np.array([0.3, -0.01])
    np.testing.assert_allclose(ret.inverse(ret(uv)), uv, atol=1e-9)
    np.testing.assert_allclose(np.abs(ret.derivative(uv)), np.diag([LAMBDA ** -3, LAMBDA ** 3]), atol=1e-8)


def test_transfer_kind_mismatch(fixture_system, fixture_rect):
    ret = ChartReturn.around(fixture_system, fixture_rect, 2, (0.125, -0.5))
    with pytest.raises(ChartDegenerate):
        pull_stable(ret, full_cylinder(fixture_rect, UNSTABLE), (0.125, -0.5))
    with pytest.raises(ChartDegenerate):
        push_unstable(ret, full_cylinder(fixture_rect, STABLE), (0.125, -0.5))


def test_toral_returns_are_fitted_affine(cat_system, cat_rect):
    ret = ChartReturn.around(cat_system, cat_rect, 2, (0.0, 0.0))
    assert ret.is_affine
    np.testing.assert_allclose(np.abs(ret.linear), np.diag([LAMBDA ** -2, LAMBDA ** 2]), atol=1e-12)
    source = pull_stable(ret, full_cylinder(cat_rect, STABLE), (0.0, 0.0)).cylinder
    assert source.representation == EXACT_AFFINE


def test_graph_tolerance_follows_chart_scale(cat_rect):
    assert graph_tolerance(cat_rect) == pytest.approx(64 * np.finfo(float).eps / cat_rect.scale)
    assert graph_tolerance(cat_rect) > 1e-14


@pytest.mark.parametrize("m", [10, 11, 12])
def test_small_chart_solve_agrees_with_affine_fit(cat_system, family, m):
    # chart scale of the rho = 0.1, s = 4 stage
    cert = pesin.pesin_certificate(cat_system, Point((0.0, 0.0)), 20, 0.5)
    rect = pesin.build_rectangle(cert, 1.0, catalog.TORUS_SPACE, delta_modulus(family, 0.1, 4) / 2.2)
    assert rect.scale < 2e-3
    plain = ChartReturn(cat_system, rect, m)
    fitted = ChartReturn.around(cat_system, rect, m, (0.0, 0.0))
    for transfer, kind in ((pull_stable, STABLE), (push_unstable, UNSTABLE)):
        sampled = transfer(plain, full_cylinder(rect, kind), (0.0, 0.0)).cylinder
        exact = transfer(fitted, full_cylinder(rect, kind), (0.0, 0.0)).cylinder
        assert sampled.representation == SAMPLED and exact.representation == EXACT_AFFINE
        assert sampled.width() == pytest.approx(2 * LAMBDA ** -m, rel=1e-6)
        for which in ("lower", "upper"):
            np.testing.assert_allclose(sampled.graph(which, sampled.t), exact.graph(which, sampled.t),
                                       rtol=1e-6, atol=1e-12)
