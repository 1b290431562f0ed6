import numpy as np
import pytest

from models import PhaseSpace, Point, PreconditionError
from models.phase_space import PLANAR, TORUS


def test_torus_wrap_stays_below_one():
    torus = PhaseSpace(TORUS)
    wrapped = torus.wrap(np.array([-1e-17, 1.25]))
    assert wrapped[0] == 0.0
    assert wrapped[1] == 0.25
    assert np.all((wrapped >= 0.0) & (wrapped < 1.0))


@pytest.mark.parametrize("c", [-1e-17, -5e-324, 1.0, 3.0])
def test_torus_point_is_canonical(c):
    point = Point((c, 0.5))
    assert point.coordinates == (0.0, 0.5)


def test_planar_points_are_untouched():
    planar = PhaseSpace(PLANAR, ((-1.0, 1.0), (-1.0, 1.0)))
    xy = np.array([-1e-17, 1.0])
    assert planar.wrap(xy) is xy
    assert Point((-1e-17, 1.0), PLANAR).coordinates == (-1e-17, 1.0)


def test_torus_displacement_is_minimal():
    torus = PhaseSpace(TORUS)
    np.testing.assert_allclose(torus.displacement(np.array([0.95, 0.1]), np.array([0.05, 0.9])), [0.1, -0.2])
    assert torus.distance(np.array([0.0, 0.0]), np.array([0.999, 0.0])) == pytest.approx(0.001)
    with pytest.raises(PreconditionError):
        PhaseSpace("sphere")
